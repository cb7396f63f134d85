#include <catch2/catch_amalgamated.hpp>

#include "marketsim/digest.hpp"

using namespace marketsim;

namespace {

std::vector<std::uint8_t> bytes_of(const Encoder& enc) {
  return {enc.data().begin(), enc.data().end()};
}

}  // namespace

TEST_CASE("sha256 matches reference vectors") {
  // Frozen against an independent implementation of FIPS 180-4.
  CHECK(sha256(std::span<const std::uint8_t>{}).hex() ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  std::span<const std::uint8_t> span(
      reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size());
  CHECK(sha256(span).hex() ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("digest hex round trip and short form") {
  auto parsed = digest_from_hex(
      "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  REQUIRE(parsed.has_value());
  CHECK(parsed->hex8() == "ba7816bf");
  CHECK(digest_from_hex(parsed->hex()) == parsed);
  CHECK_FALSE(parsed->is_zero());
  CHECK(Digest{}.is_zero());
  CHECK_FALSE(digest_from_hex("xyz").has_value());
}

TEST_CASE("lead64 reads the first eight digest bytes big endian") {
  const std::string abc = "abc";
  std::span<const std::uint8_t> span(
      reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size());
  CHECK(sha256(span).lead64() == 13436514500253700074ull);
}

TEST_CASE("encoder integer layouts are big endian") {
  Encoder enc;
  enc.put_u64(0x0102030405060708ull);
  CHECK(bytes_of(enc) ==
        std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8});

  Encoder neg;
  neg.put_i64(-1);
  CHECK(bytes_of(neg) == std::vector<std::uint8_t>(8, 0xff));

  Encoder small;
  small.put_i64(-2);
  auto b = bytes_of(small);
  REQUIRE(b.size() == 8);
  CHECK(b.back() == 0xfe);
}

TEST_CASE("encoder strings carry a length prefix") {
  Encoder enc;
  enc.put_str("ab");
  CHECK(bytes_of(enc) ==
        std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0, 2, 'a', 'b'});
}

TEST_CASE("optional encodings separate absent from zero") {
  Encoder absent;
  absent.put_opt_u64(std::nullopt);
  Encoder zero;
  zero.put_opt_u64(0);
  CHECK(bytes_of(absent) != bytes_of(zero));
  CHECK(bytes_of(absent) == std::vector<std::uint8_t>{0});
  CHECK(bytes_of(zero).size() == 9);
}

TEST_CASE("vector encodings include the element count") {
  Encoder enc;
  enc.put_vec_i64({5, -5});
  auto b = bytes_of(enc);
  REQUIRE(b.size() == 8 + 16);
  CHECK(b[7] == 2);
}
