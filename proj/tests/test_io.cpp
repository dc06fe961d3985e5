#include <gtest/gtest.h>

#include <cstring>

#include "nsreg/analytic.hpp"
#include "nsreg/config.hpp"
#include "nsreg/io.hpp"
#include "nsreg/solver.hpp"

using namespace nsreg;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("nsreg_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorKind config_kind(const std::string& text, std::string* msg = nullptr) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    if (msg) *msg = e.what();
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Snapshot, BitExactRoundTrip) {
  GridSpec g{16, 2 * kPi};
  PhysicalVector p = to_physical(random_solenoidal(g, 5));
  p.data[1][7] = -0.0;
  p.data[2][3] = 1e-310;
  std::string bytes = encode_snapshot(p, 0.125);
  SnapshotFile s = decode_snapshot(bytes);
  EXPECT_EQ(s.time, 0.125);
  for (int c = 0; c < 3; ++c)
    ASSERT_EQ(std::memcmp(s.samples.data[c].data(), p.data[c].data(), p.data[c].size() * sizeof(double)), 0);
  EXPECT_EQ(encode_snapshot(s.samples, s.time), bytes);
}

TEST(Snapshot, LayoutIsLittleEndianRowMajor) {
  GridSpec g{8, 2 * kPi};
  PhysicalVector p = zero_physical_vector(g);
  p.data[2][g.rindex(0, 0, 1)] = 1.0;
  std::string bytes = encode_snapshot(p, 0.0);
  std::string body = bytes.substr(bytes.find('\n') + 1);
  ASSERT_EQ(body.size(), 8u * 8 * 8 * 3 * 8);
  // node (0,0,1), component 2 -> slot 1*3 + 2; 1.0 = 0x3ff0000000000000
  const unsigned char* b = reinterpret_cast<const unsigned char*>(body.data()) + 5 * 8;
  EXPECT_EQ(b[7], 0x3f);
  EXPECT_EQ(b[6], 0xf0);
  EXPECT_EQ(b[0], 0x00);
}

TEST(Snapshot, TruncatedOrForeignRejected) {
  GridSpec g{8, 2 * kPi};
  std::string bytes = encode_snapshot(zero_physical_vector(g), 0.0);
  EXPECT_THROW(decode_snapshot(bytes.substr(0, bytes.size() - 8)), Error);
  EXPECT_THROW(decode_snapshot("{\"format\":\"other\"}\n"), Error);
  EXPECT_THROW(decode_snapshot("no header"), Error);
}

TEST(Ledger, RoundTripAndManifestLast) {
  GridSpec g{16, 2 * kPi};
  SnapshotPolicy pol;
  pol.stride = 5;
  TrajectoryLedger led = evolve(spectral_from(g, taylor_green_data(0.5)), 0.05, 0.005, pol);
  fs::path dir = scratch("ledger");
  write_ledger(dir, led);
  TrajectoryLedger back = read_ledger(dir);
  ASSERT_EQ(back.snapshots.size(), led.snapshots.size());
  EXPECT_EQ(back.energy, led.energy);
  EXPECT_EQ(back.step_times, led.step_times);
  for (std::size_t i = 0; i < led.snapshots.size(); ++i) {
    EXPECT_EQ(back.snapshots[i].time, led.snapshots[i].time);
    EXPECT_LT(max_abs_diff(back.snapshots[i].v, led.snapshots[i].v), 1e-15);
  }
  // a truncated snapshot invalidates the manifest
  fs::resize_file(dir / "snap_00001.bin", 100);
  EXPECT_THROW(validate_manifest(dir), Error);
  // no manifest, no ledger
  fs::remove(dir / "manifest.json");
  EXPECT_THROW(read_ledger(dir), Error);
  fs::remove_all(dir);
}

TEST(Ledger, NoPartialFilesLeft) {
  GridSpec g{8, 2 * kPi};
  fs::path dir = scratch("partial");
  write_ledger(dir, evolve(zero_field(g), 0.02, 0.01));
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".partial");
  fs::remove_all(dir);
}

TEST(Profile, SampledRoundTrip) {
  DssProfile p = swirl_profile(2.0);
  DssProfile q = decode_profile(encode_profile(p));
  EXPECT_EQ(q.lambda, 2.0);
  EXPECT_EQ(q.smoothness, "sampled");
  // exact on sample nodes
  Vec3 node{1.0, 0.0, 0.0};
  EXPECT_LT(norm(q.annulus_field(node) - p.annulus_field(node)), 1e-14);
  // interpolation error in between stays at the sampling scale
  double worst = 0, scale = 0;
  for (Vec3 x : {Vec3{1.3, 0.2, -0.4}, Vec3{-0.9, 0.8, 0.5}, Vec3{0.1, -1.7, 0.3}}) {
    worst = std::max(worst, norm(q.annulus_field(x) - p.annulus_field(x)));
    scale = std::max(scale, norm(p.annulus_field(x)));
  }
  EXPECT_LT(worst, 1e-2 * scale);
  EXPECT_THROW(decode_profile("{\"format\":\"nsreg-snapshot\"}\n"), Error);
}

TEST(Format, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(kPi)), kPi);
  CsvTable t({"a", "b"});
  t.row().add(1.0 / 3.0).add("x");
  EXPECT_EQ(t.str(), "a,b\n0.33333333333333331,x\n");
}

TEST(Config, DefaultsAndSchema) {
  Json d = parse_config("");
  EXPECT_EQ(d["schema_version"], 1);
  EXPECT_EQ(d["grid"]["n"], 32);
  Json c = parse_config("{\"schema_version\": 1, \"grid\": {\"n\": 64}}");
  EXPECT_EQ(c["grid"]["n"], 64);
  EXPECT_EQ(c["grid"]["length"].get<double>(), 2 * kPi);
  EXPECT_EQ(config_kind("{\"grid\": {\"n\": 64}}"), ErrorKind::ConfigError);
  EXPECT_EQ(config_kind("{\"schema_version\": 2}"), ErrorKind::ConfigError);
}

TEST(Config, UnknownKeyAndTypeErrorsCarryLine) {
  std::string msg;
  EXPECT_EQ(config_kind("{\n\"schema_version\": 1,\n\"solver\": {\n  \"dtt\": 0.1}\n}", &msg), ErrorKind::ConfigError);
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("solver.dtt"), std::string::npos) << msg;
  EXPECT_EQ(config_kind("{\n\"schema_version\": 1,\n\"seed\": \"x\"\n}", &msg), ErrorKind::ConfigError);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_EQ(config_kind("{\n\"schema_version\": 1,\n\n\"grid\": {\"n\": 16,}\n}", &msg), ErrorKind::ConfigError);
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(Config, BudgetsPositiveAndOverrides) {
  EXPECT_EQ(config_kind("{\"schema_version\": 1, \"budgets\": {\"eps_ckn\": 0}}"), ErrorKind::ConfigError);
  Json c = parse_config("");
  apply_budget_override(c, "eps_ckn=0.1");
  EXPECT_EQ(c["budgets"]["eps_ckn"].get<double>(), 0.1);
  EXPECT_THROW(apply_budget_override(c, "nope=1"), Error);
  EXPECT_THROW(apply_budget_override(c, "c0=-1"), Error);
  EXPECT_THROW(apply_budget_override(c, "c0=1x"), Error);
  EXPECT_THROW(apply_budget_override(c, "c0"), Error);
}

TEST(Config, NormMenuTemplates) {
  Json c = parse_config("{\"schema_version\": 1, \"norms\": [{\"kind\": \"herz\", \"p\": 4}, {\"kind\": \"uloc\"}]}");
  ASSERT_EQ(c["norms"].size(), 2u);
  EXPECT_EQ(c["norms"][0]["k_min"], -3);
  EXPECT_EQ(c["norms"][0]["p"].get<double>(), 4.0);
  EXPECT_EQ(c["norms"][1]["rho"].get<double>(), 1.0);
  EXPECT_EQ(config_kind("{\"schema_version\": 1, \"norms\": [{\"kind\": \"besov\"}]}"), ErrorKind::ConfigError);
  EXPECT_EQ(config_kind("{\"schema_version\": 1, \"norms\": [{\"kind\": \"uloc\", \"p\": 2}]}"), ErrorKind::ConfigError);
}
