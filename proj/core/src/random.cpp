#include "sgopt/random.hpp"

namespace sgopt {

namespace {

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t node, StreamPurpose purpose) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed & 0xffffffffu),
      static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(node & 0xffffffffu),
      static_cast<std::uint32_t>(node >> 32),
      static_cast<std::uint32_t>(purpose),
      0x5367u,  // domain separator
  };
  return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t node, StreamPurpose purpose)
    : engine_(keyed_engine(seed, node, purpose)) {}

double RandomStream::uniform() { return uniform_(engine_); }

double RandomStream::normal() { return normal_(engine_); }

std::vector<RandomStream> make_streams(std::uint64_t seed, int node_count, StreamPurpose purpose) {
  std::vector<RandomStream> streams;
  streams.reserve(static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) {
    streams.emplace_back(seed, static_cast<std::uint64_t>(i), purpose);
  }
  return streams;
}

}  // namespace sgopt
