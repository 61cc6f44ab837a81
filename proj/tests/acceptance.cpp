// Acceptance suite: prints one pass/fail line per criterion and exits
// nonzero if any criterion failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "discretization.hpp"
#include "exact_design.hpp"
#include "factorial_model.hpp"
#include "measure_optimizer.hpp"

using namespace bdoe;
using clock_type = std::chrono::steady_clock;

namespace {

struct Criterion {
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;
  double seconds = 0.0;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back(what);
    }
  }
};

std::vector<Effect> mains(int n) {
  std::vector<Effect> out;
  for (int i = 1; i <= n; ++i) out.push_back(Effect{{i}});
  return out;
}

Model model_t1() {
  auto e = mains(6);
  for (int i = 1; i <= 3; ++i)
    for (int j = 4; j <= 6; ++j) e.push_back(Effect{{i, j}});
  return Model(FactorialSpace({2, 2, 2, 2, 2, 2}), std::move(e));
}

Model model_t2() {
  auto e = mains(6);
  e.push_back(Effect{{1, 6}});
  e.push_back(Effect{{2, 6}});
  return Model(FactorialSpace({2, 2, 2, 2, 2, 3}), std::move(e));
}

Model model_t3() { return Model(FactorialSpace({2, 2, 3, 3, 4}), mains(5)); }

Model model_t4() {
  auto e = mains(8);
  e.push_back(Effect{{1, 2}});
  e.push_back(Effect{{1, 3}});
  e.push_back(Effect{{1, 2, 3}});
  return Model(FactorialSpace({2, 2, 2, 2, 2, 2, 2, 2}), std::move(e));
}

Model model_t5() { return Model(FactorialSpace({3, 3, 3, 3, 3}), mains(5)); }

Model model_t6() {
  auto e = mains(6);
  e.push_back(Effect{{5, 6}});
  return Model(FactorialSpace({2, 2, 2, 2, 3, 4}), std::move(e));
}

Model model_t7() {
  auto e = mains(7);
  e.push_back(Effect{{1, 2}});
  e.push_back(Effect{{1, 3}});
  e.push_back(Effect{{2, 3}});
  e.push_back(Effect{{1, 2, 3}});
  return Model(FactorialSpace({2, 2, 2, 2, 3, 3, 3}), std::move(e));
}

Model model_s5a() {
  auto e = mains(4);
  e.push_back(Effect{{1, 2}});
  e.push_back(Effect{{3, 4}});
  return Model(FactorialSpace({2, 2, 2, 2}), std::move(e));
}

Model model_s5b() {
  auto e = mains(4);
  e.push_back(Effect{{1, 4}});
  e.push_back(Effect{{2, 4}});
  return Model(FactorialSpace({2, 2, 2, 3}), std::move(e));
}

Model model_s5c() {
  return Model(FactorialSpace({2, 3, 4}),
               {Effect{{1}}, Effect{{2}}, Effect{{3}}, Effect{{2, 3}}});
}

// One published table row: either an explicit label list or a delta applied
// to the design of an earlier row (base_n). The expected triple is
// (eff_lb, eff_lb(1), eff_lb(5)).
struct TableRow {
  int n;
  char procedure;  // 'A', '1' (B1), '2' (B2)
  std::vector<int> labels;
  int base_n = 0;
  std::vector<int> adds;
  std::vector<int> dels;
  double expected[3];
};

struct Table {
  std::string name;
  Model model;
  std::optional<int> a_hint;    // N1 the paper starts procedure A from
  std::optional<int> b1_hint;   // B2-produced start for B1, when stated
  std::vector<TableRow> rows;
};

std::vector<Table> published_tables() {
  std::vector<Table> tables;

  tables.push_back(
      {"table1", model_t1(), std::nullopt, std::nullopt,
       {{16, '2', {9, 12, 14, 15, 17, 20, 22, 23, 33, 36, 38, 39, 57, 60, 62, 63},
         0, {}, {}, {0.9411, 0.9327, 0.9256}},
        {17, '2', {}, 16, {1}, {}, {0.9512, 0.9436, 0.9371}},
        {18, '2', {}, 17, {49}, {}, {0.9426, 0.9332, 0.9250}},
        {19, '2', {}, 18, {6}, {}, {0.9393, 0.9287, 0.9194}},
        {20, '2', {}, 19, {4}, {}, {0.9411, 0.9302, 0.9204}},
        {21, '2', {}, 20, {7}, {}, {0.9482, 0.9379, 0.9285}},
        {22, '2', {}, 21, {41}, {}, {0.9606, 0.9523, 0.9444}},
        {23, '2', {}, 22, {25}, {}, {0.9790, 0.9742, 0.9695}}}});

  tables.push_back(
      {"table2", model_t2(), 304, std::nullopt,
       {{13, 'A', {10, 13, 20, 24, 27, 29, 31, 51, 53, 55, 76, 92, 96},
         0, {}, {}, {0.9129, 0.9066, 0.9019}},
        {14, 'A', {}, 13, {40, 67}, {55}, {0.9303, 0.9247, 0.9205}},
        {15, 'A', {}, 14, {4}, {}, {0.9336, 0.9279, 0.9235}},
        {16, 'A', {}, 15, {52, 91}, {4}, {0.9460, 0.9409, 0.9369}},
        {17, 'A', {}, 16, {8, 17}, {20}, {0.9568, 0.9524, 0.9490}},
        {18, 'A', {}, 17, {12, 88}, {76}, {0.9607, 0.9564, 0.9530}},
        {19, '2', {4, 13, 15, 17, 18, 19, 23, 26, 28, 33, 46, 50, 52, 57, 70,
                   76, 90, 91, 95},
         0, {}, {}, {0.9604, 0.9558, 0.9521}},
        {20, '1', {2, 4, 6, 7, 8, 19, 21, 34, 36, 37, 41, 44, 49, 60, 70, 71,
                   74, 79, 88, 90},
         0, {}, {}, {0.9609, 0.9561, 0.9522}}}});

  tables.push_back(
      {"table3", model_t3(), 280, std::nullopt,
       {{14, '1', {8, 10, 13, 19, 28, 33, 39, 57, 66, 77, 86, 107, 109, 132},
         0, {}, {}, {0.9300, 0.9265, 0.9240}},
        {15, '1', {}, 14, {137}, {}, {0.9443, 0.9413, 0.9391}},
        {16, '1', {}, 15, {9, 25}, {33}, {0.9486, 0.9456, 0.9434}},
        {17, '1', {}, 16, {112}, {}, {0.9573, 0.9546, 0.9526}},
        {18, 'A', {3, 6, 24, 25, 33, 40, 43, 50, 53, 73, 82, 87, 89, 104, 109,
                   117, 134, 143},
         0, {}, {}, {0.9602, 0.9575, 0.9556}},
        {19, 'A', {}, 18, {124}, {}, {0.9619, 0.9592, 0.9572}},
        {20, 'A', {}, 19, {80}, {}, {0.9626, 0.9598, 0.9577}},
        {21, '1', {8, 9, 13, 19, 25, 28, 38, 39, 47, 57, 66, 72, 77, 82, 86,
                   99, 107, 109, 112, 128, 137},
         0, {}, {}, {0.9587, 0.9554, 0.9530}}}});

  tables.push_back(
      {"table4", model_t4(), 288, std::nullopt,
       {{14, 'A', {11, 22, 60, 92, 100, 125, 137, 152, 167, 186, 208, 209, 230,
                   251},
         0, {}, {}, {0.9088, 0.9063, 0.9046}},
        {15, 'A', {}, 14, {147, 160}, {152}, {0.9186, 0.9162, 0.9145}},
        {16, 'A', {}, 15, {63, 96}, {92}, {0.9267, 0.9244, 0.9228}},
        {17, 'A', {}, 16, {58, 89}, {60}, {0.9389, 0.9369, 0.9354}},
        {18, '1', {5, 20, 44, 49, 74, 83, 103, 118, 130, 137, 148, 159, 163,
                   190, 204, 213, 232, 249},
         0, {}, {}, {0.9508, 0.9490, 0.9477}},
        {19, '1', {}, 18, {6, 13}, {5}, {0.9497, 0.9477, 0.9463}},
        {20, '1', {}, 19, {210, 215}, {213}, {0.9530, 0.9510, 0.9497}},
        {21, '1', {}, 20, {134, 191}, {130}, {0.9558, 0.9539, 0.9525}}}});

  tables.push_back(
      {"table5", model_t5(), 306, std::nullopt,
       {{15, 'A', {10, 23, 27, 31, 39, 61, 65, 83, 94, 125, 154, 165, 178, 208,
                   231},
         0, {}, {}, {0.9107, 0.9080, 0.9062}},
        {16, 'A', {}, 15, {141, 197}, {10}, {0.9203, 0.9177, 0.9159}},
        {17, 'A', {}, 16, {114, 239}, {141}, {0.9298, 0.9273, 0.9256}},
        {18, 'A', {}, 17, {136, 162}, {154}, {0.9362, 0.9338, 0.9321}},
        {19, '1', {8, 10, 13, 24, 35, 46, 57, 66, 99, 101, 112, 119, 139, 163,
                   165, 205, 213, 230, 241},
         0, {}, {}, {0.9378, 0.9354, 0.9337}},
        {20, 'A', {}, 18, {7, 46, 66, 100}, {39, 231}, {0.9429, 0.9405, 0.9388}},
        {21, '1', {}, 19, {74, 106, 167, 207}, {66, 205},
         {0.9478, 0.9455, 0.9438}},
        {22, '1', {}, 21, {58, 138}, {139}, {0.9512, 0.9490, 0.9473}}}});

  tables.push_back(
      {"table6", model_t6(), std::nullopt, 74,
       {{20, '1', {1, 24, 28, 29, 50, 63, 73, 93, 105, 123, 133, 134, 160, 161,
                   162, 163, 164, 166, 167, 180},
         0, {}, {}, {0.9204, 0.9156, 0.9121}},
        {21, '1', {}, 20, {34}, {}, {0.9151, 0.9098, 0.9059}},
        {22, '1', {}, 21, {85, 89}, {29}, {0.9167, 0.9112, 0.9071}},
        {23, '1', {}, 22, {101, 157}, {85}, {0.9218, 0.9164, 0.9123}},
        {24, '1', {}, 23, {117, 119}, {167}, {0.9216, 0.9159, 0.9116}},
        {25, '1', {}, 24, {19, 175}, {163}, {0.9250, 0.9192, 0.9149}},
        {26, '1', {}, 25, {54, 138}, {162}, {0.9281, 0.9223, 0.9179}},
        {27, '1', {}, 26, {20, 176}, {164}, {0.9323, 0.9266, 0.9223}}}});

  tables.push_back(
      {"table7", model_t7(), std::nullopt, 98,
       {{20, '1', {6, 38, 52, 77, 90, 91, 124, 137, 159, 184, 192, 224, 237,
                   256, 271, 314, 342, 353, 389, 412},
         0, {}, {}, {0.9202, 0.9184, 0.9171}},
        {21, '1', {}, 20, {343, 356}, {353}, {0.9271, 0.9253, 0.9240}},
        {22, '1', {}, 21, {13, 215}, {184}, {0.9385, 0.9369, 0.9358}},
        {23, '1', {}, 22, {1, 175}, {13}, {0.9416, 0.9400, 0.9389}},
        {24, '1', {}, 23, {247, 253}, {256}, {0.9440, 0.9424, 0.9413}},
        {25, '1', {}, 24, {115, 121}, {124}, {0.9461, 0.9445, 0.9433}},
        {26, '1', {}, 25, {49, 206}, {215}, {0.9485, 0.9468, 0.9457}},
        {27, '1', {}, 26, {83, 99}, {90}, {0.9521, 0.9505, 0.9494}}}});

  return tables;
}

// Replication vectors of every row, reconstructing the delta rows.
std::map<int, ExactDesign> materialize(const Table& table) {
  std::map<int, ExactDesign> designs;
  for (const TableRow& row : table.rows) {
    if (!row.labels.empty()) {
      designs.emplace(row.n,
                      ExactDesign::from_labels(table.model.v(), row.labels));
    } else {
      std::vector<int> reps = designs.at(row.base_n).replications();
      for (int k : row.adds) ++reps[k - 1];
      for (int k : row.dels) --reps[k - 1];
      designs.emplace(row.n, ExactDesign(std::move(reps)));
    }
  }
  return designs;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

double psi_normalized(const DesignScore& sc, double rho, double trace_w) {
  return sc.a_value + rho * (sc.tr_v - trace_w);
}

}  // namespace

int main() {
  std::vector<Criterion> criteria;
  std::map<std::string, OptimizerResult> opt_cache;

  auto optimum = [&](const std::string& key, const Model& m) -> const OptimizerResult& {
    auto it = opt_cache.find(key);
    if (it == opt_cache.end())
      it = opt_cache.emplace(key, optimize(m.z(), 1e-10, 5'000'000)).first;
    return it->second;
  };

  const std::vector<Table> tables = published_tables();

  // ---------------------------------------------------------------- 1
  {
    Criterion c{"optimal-measure reproduction (2^5x3 masses)"};
    const auto t0 = clock_type::now();
    const Model& m = tables[1].model;
    const OptimizerResult& res = optimum("t2", m);
    c.expect(res.terminal_gap <= 1e-10, "terminal gap above 1e-10");

    const double m1 = res.p_hat(m.space().label({0, 0, 0, 0, 0, 0}) - 1);
    const double m2 = res.p_hat(m.space().label({1, 1, 0, 0, 0, 0}) - 1);
    const double m3 = res.p_hat(m.space().label({1, 1, 0, 0, 1, 1}) - 1);
    c.expect(std::abs(m1 - 0.0479) <= 0.0005,
             "mass at 000000 = " + fmt(m1) + ", published 0.0479");
    c.expect(std::abs(m2 - 0.0150) <= 0.0005,
             "mass at 110000 = " + fmt(m2) + ", published 0.0150");
    c.expect(std::abs(m3 - 0.0057) <= 0.0005,
             "mass at 110011 = " + fmt(m3) + ", published 0.0057");
    if (!c.pass)
      c.notes.push_back(
          "the A-optimal measure of this model is non-unique (54-dim flat "
          "optimum); iteration (3.4) from the uniform start provably cannot "
          "single out the published point masses, and the measure matching "
          "them is not optimal for tr{M(p)}^-1 (see decisions ledger); s and "
          "all efficiency bounds are unaffected");
    c.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    c.expect(c.seconds < 60.0, "runtime above 60 s");
    criteria.push_back(std::move(c));
  }

  // ---------------------------------------------------------------- 2
  {
    Criterion c{"fixed-design scoring of all published rows"};
    const auto t0 = clock_type::now();
    for (const Table& table : tables) {
      const OptimizerResult& opt = optimum(table.name, table.model);
      const auto designs = materialize(table);
      for (const TableRow& row : table.rows) {
        const DesignScore sc =
            score_design(table.model, designs.at(row.n), opt.s, {1.0, 5.0});
        const double got[3] = {sc.eff_lb, sc.eff_lb_rho[0], sc.eff_lb_rho[1]};
        for (int i = 0; i < 3; ++i) {
          if (std::abs(got[i] - row.expected[i]) > 0.0001) {
            std::ostringstream os;
            os << table.name << " N=" << row.n << " col " << i << ": got "
               << fmt(got[i]) << ", published " << fmt(row.expected[i]);
            c.expect(false, os.str());
          }
        }
      }
    }
    c.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    c.expect(c.seconds < 300.0, "runtime above 5 min");
    criteria.push_back(std::move(c));
  }

  // ---------------------------------------------------------------- 3
  {
    Criterion c{"procedure reproduction on tables 1-7"};
    const auto t0 = clock_type::now();
    // The published tie resolution is unknown, so each row is checked against
    // its own procedure run with tie reshuffling (restart 0 = canonical
    // order); a descent to the smallest listed size visits every listed size
    // on the way. Table 1 is a two-sided check against a single canonical B2
    // path; the other tables are lower bounds.
    constexpr int kRestarts = 32;
    for (const Table& table : tables) {
      const OptimizerResult& opt = optimum(table.name, table.model);
      const bool two_sided = table.name == "table1";

      std::map<char, int> smallest;
      for (const TableRow& row : table.rows) {
        auto [it, fresh] = smallest.emplace(row.procedure, row.n);
        if (!fresh) it->second = std::min(it->second, row.n);
      }
      std::map<char, SearchTrace> traces;
      for (const auto& [proc, target] : smallest) {
        ProcedureConfig cfg;
        cfg.target_n = target;
        cfg.restarts = two_sided ? 1 : kRestarts;
        try {
          if (proc == 'A') {
            cfg.n1_hint = table.a_hint;
            traces.emplace(proc,
                           procedure_a(table.model, opt.p_hat, opt.s, cfg));
          } else if (proc == '1') {
            cfg.n1_hint = table.b1_hint;
            traces.emplace(proc, procedure_b1(table.model, opt.s, cfg));
          } else {
            traces.emplace(proc, procedure_b2(table.model, opt.s, cfg));
          }
        } catch (const Error& e) {
          c.expect(false, table.name + " procedure " + proc + " failed: " +
                              e.what());
        }
      }

      for (const TableRow& row : table.rows) {
        const auto it = traces.find(row.procedure);
        if (it == traces.end()) continue;  // failure already recorded
        const ExactDesign* d = it->second.design_at(row.n);
        if (!d) {
          c.expect(false, table.name + " N=" + std::to_string(row.n) +
                              ": descent never visited this size");
          continue;
        }
        const double eff = eff_lb(*d, table.model.z(), opt.s);
        const bool ok = two_sided ? std::abs(eff - row.expected[0]) <= 0.002
                                  : eff >= row.expected[0] - 0.002;
        if (!ok) {
          std::ostringstream os;
          os << table.name << " N=" << row.n << " proc " << row.procedure
             << ": got " << fmt(eff) << ", published " << fmt(row.expected[0]);
          c.expect(false, os.str());
        }
      }
    }
    c.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    c.expect(c.seconds < 1800.0, "runtime above 30 min");
    criteria.push_back(std::move(c));
  }

  // ---------------------------------------------------------------- 4
  {
    Criterion c{"rounding-off failure on 2^5x3 for N <= 32"};
    const auto t0 = clock_type::now();
    const Model& m = tables[1].model;
    const OptimizerResult& opt = optimum("table2", m);
    for (int n = m.q() + 1; n <= 32; ++n) {
      try {
        round_measure(opt.p_hat, n, m.z());
        c.expect(false,
                 "rounding produced a nonsingular design at N = " +
                     std::to_string(n));
      } catch (const Error& e) {
        c.expect(e.code() == ErrorCode::NoValidRounding ||
                     e.code() == ErrorCode::Singular,
                 "unexpected failure type at N = " + std::to_string(n));
      }
    }
    c.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    criteria.push_back(std::move(c));
  }

  // ---------------------------------------------------------------- 5
  {
    Criterion c{"oracle agreement on the section-5 cases"};
    const auto t0 = clock_type::now();
    struct Case {
      std::string name;
      Model model;
      std::vector<int> run_sizes;
    };
    std::vector<Case> cases;
    cases.push_back({"(a) 2^4", model_s5a(), {7, 8, 9, 10}});
    cases.push_back({"(b) 2^3x3", model_s5b(), {10, 11}});
    cases.push_back({"(c) 2x3x4", model_s5c(), {13, 14}});
    const std::vector<double> rhos = {1.0, 5.0};

    for (const Case& cs : cases) {
      const OptimizerResult& opt = optimum(cs.name, cs.model);
      const int min_n =
          *std::min_element(cs.run_sizes.begin(), cs.run_sizes.end());

      ProcedureConfig cfg;
      cfg.target_n = min_n;
      const SearchTrace trace_a = procedure_a(cs.model, opt.p_hat, opt.s, cfg);
      const SearchTrace trace_b1 = procedure_b1(cs.model, opt.s, cfg);

      for (int n : cs.run_sizes) {
        const OracleResult oracle =
            brute_force_binary_oracle(cs.model, n, rhos);
        const bool exceptional = (cs.name == "(a) 2^4" && n == 9);

        for (const auto* trace : {&trace_a, &trace_b1}) {
          const ExactDesign* d = trace->design_at(n);
          if (!d) {
            c.expect(false, cs.name + " N=" + std::to_string(n) +
                                ": descent missed this size");
            continue;
          }
          const DesignScore sc = score_design(cs.model, *d, opt.s, rhos);
          const std::string tag = cs.name + " N=" + std::to_string(n) +
                                  " proc " + trace->procedure;
          if (!exceptional) {
            c.expect(sc.a_value <= oracle.min_a_value * (1 + 1e-9),
                     tag + ": tr(H^-1) above the oracle minimum");
            for (std::size_t r = 0; r < rhos.size(); ++r) {
              const double got =
                  psi_normalized(sc, rhos[r], cs.model.trace_w());
              c.expect(got <= oracle.min_psi[r] * (1 + 1e-9),
                       tag + ": psi above the oracle minimum");
            }
          } else {
            const double true_eff0 = oracle.min_a_value / sc.a_value;
            c.expect(std::abs(true_eff0 - 0.9796) <= 0.0005,
                     tag + ": true efficiency at rho=0 is " + fmt(true_eff0) +
                         ", published 0.9796");
            const double expected_rho[2] = {0.9734, 0.9664};
            for (std::size_t r = 0; r < rhos.size(); ++r) {
              const double got =
                  oracle.min_psi[r] /
                  psi_normalized(sc, rhos[r], cs.model.trace_w());
              c.expect(std::abs(got - expected_rho[r]) <= 0.0005,
                       tag + ": true efficiency at rho=" +
                           std::to_string((int)rhos[r]) + " is " + fmt(got) +
                           ", published " + fmt(expected_rho[r]));
            }
          }
        }
      }
    }
    c.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    c.expect(c.seconds < 600.0, "runtime above 10 min");
    criteria.push_back(std::move(c));
  }

  // ---------------------------------------------------------------- 6
  {
    Criterion c{"property suites (lemmas and identities)"};
    const auto t0 = clock_type::now();
    const Model m33(FactorialSpace({3, 3}), mains(2));
    std::mt19937_64 rng(2026);
    auto random_measure = [&](int v) {
      std::uniform_real_distribution<double> unif(0.05, 1.0);
      arma::vec p(v);
      for (int k = 0; k < v; ++k) p(k) = unif(rng);
      return arma::vec(p / arma::accu(p));
    };

    // Convexity and the mixture identity, 100 random pairs.
    for (int rep = 0; rep < 100; ++rep) {
      const arma::vec p = random_measure(m33.v());
      const arma::vec pt = random_measure(m33.v());
      for (double eps : {0.1, 0.5, 0.9}) {
        const double lhs =
            (1 - eps) * phi(p, m33.z()) + eps * phi(pt, m33.z());
        c.expect(lhs >= phi((1 - eps) * p + eps * pt, m33.z()) - 1e-9,
                 "convexity violated");
      }
      const double eps = 0.37;
      const arma::vec g = m33.z().t() * (pt - p);
      const arma::mat expected = (1 - eps) * info_of_measure(p, m33.z()) +
                                 eps * info_of_measure(pt, m33.z()) +
                                 eps * (1 - eps) * g * g.t();
      c.expect(arma::norm(info_of_measure((1 - eps) * p + eps * pt, m33.z()) -
                              expected,
                          "inf") < 1e-12,
               "mixture identity violated");
    }

    // Directional derivative against a finite difference.
    for (int rep = 0; rep < 20; ++rep) {
      const arma::vec p = random_measure(m33.v());
      const arma::vec pt = random_measure(m33.v());
      const double eps = 1e-6;
      const double dd = directional_derivative(p, pt, m33.z());
      const double fd =
          (phi((1 - eps) * p + eps * pt, m33.z()) - phi(p, m33.z())) / eps;
      c.expect(std::abs(dd - fd) <= 1e-4 * std::max(1.0, std::abs(dd)),
               "directional derivative does not match finite difference");
    }

    // Simplex preservation and the terminal certificate on a real model.
    {
      const Model& t2 = tables[1].model;
      const arma::vec uniform(t2.v(), arma::fill::value(1.0 / t2.v()));
      const arma::vec stepped = multiplicative_step(uniform, t2.z());
      c.expect(stepped.min() >= 0.0 &&
                   std::abs(arma::accu(stepped) - 1.0) <= 1e-12,
               "multiplicative step left the simplex");
      const OptimizerResult& opt = optimum("table2", t2);
      c.expect(opt.terminal_gap <= 1e-10, "terminal condition not met");
    }

    // Lemma 3 and the replication identity on random designs.
    {
      const arma::mat p_basis = build_orthocomplement(m33.x());
      std::uniform_int_distribution<int> binary_runs(6, 9);
      std::uniform_int_distribution<int> open_runs(7, 14);
      std::uniform_int_distribution<int> pick(0, m33.v() - 1);
      int binary_checked = 0, nonbinary_checked = 0;
      while (binary_checked < 200 || nonbinary_checked < 200) {
        const bool binary = binary_checked < 200;
        const int n = binary ? binary_runs(rng) : open_runs(rng);
        std::vector<int> reps(m33.v(), 0);
        int placed = 0;
        while (placed < n) {
          const int k = pick(rng);
          if (binary && reps[k] == 1) continue;
          ++reps[k];
          ++placed;
        }
        const ExactDesign d(reps);
        const arma::mat h = info_of_design(d, m33.z());
        try {
          a_value(d, m33.z());
        } catch (const Error&) {
          continue;
        }
        const arma::mat h_inv = arma::inv_sympd(h);
        const arma::mat v = v_matrix(d, m33.z());
        if (d.is_binary()) {
          c.expect(arma::norm(v - h_inv, "inf") <= 1e-9,
                   "V != H^-1 for a binary design");
          ++binary_checked;
        } else {
          c.expect(arma::eig_sym(v - h_inv).min() >= -1e-9,
                   "V - H^-1 not nonnegative definite");
          ++nonbinary_checked;
        }

        // Lemma 3(a) through the explicit orthocomplement.
        {
          const int nn = d.n_runs();
          arma::mat z_d(nn, m33.q());
          arma::mat p_d(nn, p_basis.n_cols);
          int row = 0;
          for (int label : d.labels()) {
            z_d.row(row) = m33.z().row(label - 1);
            p_d.row(row) = p_basis.row(label - 1);
            ++row;
          }
          const arma::mat l_n = arma::eye(nn, nn) - arma::ones(nn, nn) / nn;
          const arma::mat lhs =
              h_inv * z_d.t() * l_n * p_d * p_d.t() * l_n * z_d * h_inv;
          c.expect(arma::norm(lhs - (v - m33.w()), "inf") <= 1e-8,
                   "orthocomplement identity violated");
        }

        // Replication identity, elementwise.
        {
          const int nn = d.n_runs();
          const arma::vec r = arma::conv_to<arma::vec>::from(d.replications());
          const arma::mat delta = arma::diagmat(r) - r * r.t() / nn;
          const arma::mat center =
              arma::eye(m33.v(), m33.v()) - r * arma::ones(1, m33.v()) / nn;
          const arma::mat rhs =
              center * arma::diagmat(r % r - r) * center.t();
          c.expect(arma::norm(delta * delta - delta - rhs, "inf") <= 1e-10,
                   "replication identity violated");
        }
      }
    }

    // eff_lb stays a lower bound on every published design.
    for (const Table& table : tables) {
      const OptimizerResult& opt = optimum(table.name, table.model);
      for (const auto& [n, d] : materialize(table)) {
        c.expect(eff_lb(d, table.model.z(), opt.s) <= 1.0 + 1e-9,
                 table.name + ": eff_lb above 1");
      }
    }
    c.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    criteria.push_back(std::move(c));
  }

  // ---------------------------------------------------------------- 7
  {
    Criterion c{"larger-N spot checks (3^5 B1 at 28, table-6 B2 at 33)"};
    const auto t0 = clock_type::now();
    {
      const Model& m = tables[4].model;
      const OptimizerResult& opt = optimum("table5", m);
      ProcedureConfig cfg;
      cfg.target_n = 28;
      cfg.rho_list = {1.0, 5.0};
      cfg.restarts = 16;
      const SearchTrace trace = procedure_b1(m, opt.s, cfg);
      const DesignScore sc =
          score_design(m, trace.final_design(), opt.s, cfg.rho_list);
      c.expect(sc.eff_lb >= 0.9588,
               "3^5 B1 N=28 eff_lb = " + fmt(sc.eff_lb) + " < 0.9588");
      c.expect(sc.eff_lb_rho[0] >= 0.9564,
               "3^5 B1 N=28 eff_lb(1) = " + fmt(sc.eff_lb_rho[0]) + " < 0.9564");
      c.expect(sc.eff_lb_rho[1] >= 0.9547,
               "3^5 B1 N=28 eff_lb(5) = " + fmt(sc.eff_lb_rho[1]) + " < 0.9547");
    }
    {
      const Model& m = tables[5].model;
      const OptimizerResult& opt = optimum("table6", m);
      ProcedureConfig cfg;
      cfg.target_n = 33;
      cfg.restarts = 16;
      const SearchTrace trace = procedure_b2(m, opt.s, cfg);
      const double eff = eff_lb(trace.final_design(), m.z(), opt.s);
      c.expect(eff >= 0.9693, "table-6 B2 N=33 eff_lb = " + fmt(eff) + " < 0.9693");
    }
    c.seconds = std::chrono::duration<double>(clock_type::now() - t0).count();
    criteria.push_back(std::move(c));
  }

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    std::printf("criterion %zu: %s  %s  [%.1f s]\n", i + 1,
                c.pass ? "PASS" : "FAIL", c.title.c_str(), c.seconds);
    for (const std::string& note : c.notes)
      std::printf("    - %s\n", note.c_str());
    if (!c.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", (int)criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
