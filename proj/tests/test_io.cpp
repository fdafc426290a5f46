#include "support.hpp"

#include "radiomap/file_util.hpp"
#include "radiomap/rmt_io.hpp"

using namespace radiomap;

TEST_CASE("RMT1 header layout")
{
    RawTensor t{DType::f32, {2, 3}, {1, 2, 3, 4, 5, 6}};
    const auto b = encode_rmt(t);
    REQUIRE(b.size() == 4 + 1 + 1 + 2 * 4 + 6 * 4);
    CHECK(std::string(b.begin(), b.begin() + 4) == "RMT1");
    CHECK(b[4] == 1);
    CHECK(b[5] == 2);
    CHECK(b[6] == 2); // first dim, little-endian
    CHECK(b[7] == 0);
    CHECK(b[10] == 3);
    // 1.0f little-endian is 00 00 80 3f
    CHECK(b[14] == 0x00);
    CHECK(b[16] == 0x80);
    CHECK(b[17] == 0x3f);
}

TEST_CASE("RMT1 round trips")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    RawTensor t{DType::f64, {3, 4, 2}, {}};
    for (int k = 0; k < 24; ++k)
        t.data.push_back(nd(rng));
    const auto back = decode_rmt(encode_rmt(t));
    CHECK(back.dims == t.dims);
    CHECK(back.data == t.data);

    const auto dir = testing::temp_dir("rmt");
    write_rmt(dir / "a.rmt", t);
    CHECK(read_rmt(dir / "a.rmt").data == t.data);
    CHECK_FALSE(std::filesystem::exists(dir / "a.rmt.tmp"));
}

TEST_CASE("RMT1 rejects malformed input")
{
    RawTensor t{DType::f64, {2}, {1.0, 2.0}};
    auto b = encode_rmt(t);
    auto bad = b;
    bad[0] = 'X';
    CHECK_THROWS_WITH(decode_rmt(bad, "x.rmt"), doctest::Contains("bad magic"));
    bad = b;
    bad[4] = 7;
    CHECK_THROWS_WITH(decode_rmt(bad), doctest::Contains("dtype"));
    bad = b;
    bad.pop_back();
    CHECK_THROWS_WITH(decode_rmt(bad), doctest::Contains("payload"));
    bad.assign(b.begin(), b.begin() + 7);
    CHECK_THROWS_WITH(decode_rmt(bad), doctest::Contains("truncated"));
    t.data.push_back(3.0);
    CHECK_THROWS_AS(encode_rmt(t), std::invalid_argument);
}

TEST_CASE("hashing and seed mixing are stable")
{
    const std::string s = "a";
    // Reference FNV-1a 64 of "a".
    CHECK(fnv1a64(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()) == 0xaf63dc4c8601ec8cull);
    CHECK(hex64(0xabcull) == "0000000000000abc");
    CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
    CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
}
