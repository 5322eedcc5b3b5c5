#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "hmlc/checkpoint.hpp"
#include "hmlc/error.hpp"

using namespace hmlc;

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<std::size_t> hidden{3 + gen() % 4};
    Mlp m = Mlp::create(2 + gen() % 3, hidden, 1 + gen() % 4, gen());
    if (trial % 2) m = freeze_all_but_last(std::move(m));
    AdamState s = AdamState::for_model(m);
    std::normal_distribution<double> n;
    for (auto& w : s.m_weights) for (double& v : w.values()) v = n(gen) * 1e-7;
    for (auto& w : s.v_weights) for (double& v : w.values()) v = std::abs(n(gen)) * 1e-13;
    s.t = gen() % 1000;
    const Checkpoint ckpt{m, trial % 3 ? std::optional<AdamState>(s) : std::nullopt};
    const std::string text = format_checkpoint(ckpt);
    const Checkpoint back = parse_checkpoint(text);
    EXPECT_EQ(back, ckpt);
    EXPECT_EQ(format_checkpoint(back), text);
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "hmlc_ckpt_test" / "m.ckpt";
  const Checkpoint ckpt{Mlp::create(3, std::vector<std::size_t>{4}, 2, 5), std::nullopt};
  save_checkpoint(path, ckpt);
  EXPECT_EQ(load_checkpoint(path), ckpt);
  std::filesystem::remove_all(path.parent_path());
}

TEST(Checkpoint, RejectsMalformedInput) {
  const std::string good = format_checkpoint({Mlp::zeros(2, {}, 1), std::nullopt});
  EXPECT_NO_THROW(parse_checkpoint(good));
  EXPECT_THROW(parse_checkpoint(""), DataError);
  EXPECT_THROW(parse_checkpoint("hmlc-checkpoint 2\n"), DataError);
  std::string truncated = good.substr(0, good.size() - 4);
  EXPECT_THROW(parse_checkpoint(truncated), DataError);
  std::string bad_number = good;
  bad_number.replace(bad_number.find("w 0"), 3, "w x");
  EXPECT_THROW(parse_checkpoint(bad_number), DataError);
  EXPECT_THROW(load_checkpoint("/nonexistent/x.ckpt"), DataError);
}
