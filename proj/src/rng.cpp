#include "unicorn/rng.hpp"

namespace unicorn {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

uint64_t derive_seed(uint64_t root, std::string_view stream) {
  return splitmix64(root ^ fnv1a(stream));
}

uint64_t derive_seed(uint64_t root, std::string_view stream, uint64_t index) {
  return splitmix64(derive_seed(root, stream) ^ splitmix64(index + 0x51ed2701ULL));
}

int64_t Rng::uniform_int(int64_t n) {
  // Rejection sampling keeps the draw exactly uniform.
  uint64_t un = static_cast<uint64_t>(n);
  uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return static_cast<int64_t>(x % un);
}

}  // namespace unicorn
