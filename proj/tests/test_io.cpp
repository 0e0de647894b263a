#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <random>

#include "oracle.hpp"
#include "sod/io.hpp"
#include "sod/protocols.hpp"

using namespace sod;
using io::json;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sod_test_io_" + name);
}

}  // namespace

TEST_CASE("operator round trip is bit-exact") {
  std::mt19937_64 rng(11);
  const SpaceRegistry reg{{"A", 2}, {"B", 3}};
  const LabeledOperator op(reg, oracle::random_matrix(6, rng) * 1e-7 + oracle::random_hermitian(6, rng));
  const auto path = temp_file("op.json");
  io::write_json(path, io::operator_to_json(op));
  const LabeledOperator back = io::operator_from_json(io::read_json(path));
  CHECK(back.registry().labels() == reg.labels());
  CHECK(back.matrix().size() == op.matrix().size());
  CHECK((back.matrix().array() == op.matrix().array()).all());
  std::filesystem::remove(path);

  // real operators omit "im"
  const json real = io::operator_to_json(LabeledOperator::identity(reg));
  CHECK_FALSE(real.contains("im"));
  CHECK(io::operator_from_json(real).matrix() == Matrix::Identity(6, 6));
}

TEST_CASE("one-slot comb and pair round trip") {
  const OneSlotComb tel = teleportation_sstgs();
  const OneSlotComb back = io::one_slot_from_json(io::one_slot_to_json(tel));
  CHECK(back.target == tel.target);
  CHECK(back.p_nominal == tel.p_nominal);
  CHECK(back.choi.matrix() == tel.choi.matrix());

  const auto b = build_success_or_draw(tel, 2, 0.2, 5, 1);
  const io::PairFile pair{b.s, b.n, TargetKind::inverse, 0.2};
  const auto path = temp_file("pair.json");
  io::write_json(path, io::pair_to_json(pair));
  const io::PairFile p = io::pair_from_json(io::read_json(path));
  std::filesystem::remove(path);
  CHECK(p.s.structure() == b.s.structure());
  CHECK(p.epsilon == 0.2);
  CHECK(p.target == TargetKind::inverse);
  CHECK(p.s.choi().matrix() == b.s.choi().matrix());
  CHECK(p.n.choi().matrix() == b.n.choi().matrix());
  CHECK(p.n.choi().registry().labels() == b.n.choi().registry().labels());
}

TEST_CASE("malformed input raises FormatError") {
  const json good = io::one_slot_to_json(teleportation_sstgs());

  CHECK_THROWS_AS(io::operator_from_json(json::object()), io::FormatError);
  json bad = good;
  bad["re"].erase(0);
  CHECK_THROWS_AS(io::operator_from_json(bad), io::FormatError);
  bad = good;
  bad["re"][0][0] = "x";
  CHECK_THROWS_AS(io::operator_from_json(bad), io::FormatError);
  bad = good;
  bad["spaces"][0]["dim"] = 0;
  CHECK_THROWS_AS(io::operator_from_json(bad), io::FormatError);
  bad = good;
  bad["spaces"][0]["dim"] = 100000;
  CHECK_THROWS_AS(io::operator_from_json(bad), io::FormatError);
  bad = good;
  bad["spaces"][1]["label"] = "I0";
  CHECK_THROWS_AS(io::operator_from_json(bad), io::FormatError);
  bad = good;
  bad["target"] = "rotate";
  CHECK_THROWS_AS(io::one_slot_from_json(bad), io::FormatError);
  bad = good;
  bad.erase("p_nominal");
  CHECK_THROWS_AS(io::one_slot_from_json(bad), io::FormatError);

  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 1) = std::nan("");
  CHECK_THROWS_AS(io::operator_to_json(LabeledOperator(SpaceRegistry{{"A", 2}}, nan)), io::FormatError);

  const auto b = build_success_or_draw(teleportation_sstgs(), 2, 0.2, 5, 1);
  json pair = io::pair_to_json({b.s, b.n, TargetKind::inverse, 0.2});
  pair["structure"]["K"] = 3;
  CHECK_THROWS_AS(io::pair_from_json(pair), io::FormatError);

  const auto path = temp_file("truncated.json");
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"structure\": {\"K\": 2,", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(io::read_json(path), io::FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(io::read_json(temp_file("does_not_exist.json")), io::FormatError);
}
