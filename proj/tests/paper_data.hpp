#pragma once

// Synthetic stand-ins for the variable sets of the two model-type examples:
// same variable names, types, levels and missingness ranking.

#include <random>
#include <string>
#include <vector>

#include "support.hpp"

namespace testsupport {

// SBP ~ age + gender + WC + alc + bili + occup + smoke, 1000 rows.
// Missing counts: alc 180 > occup 150 > bili 100 > smoke 60 > WC 20.
inline Table mod7a_table() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> u3(0, 2);
  const int n = 1000;
  std::vector<double> sbp, age, wc, bili;
  std::vector<std::string> gender, alc, occup, smoke;
  const char* occ[] = {"working", "looking for work", "not working"};
  const char* smk[] = {"never", "former", "current"};
  for (int i = 0; i < n; ++i) {
    age.push_back(20 + 60 * (i % 97) / 96.0);
    gender.push_back(i % 3 == 1 ? "female" : "male");
    wc.push_back(i < 20 ? NA : 95 + 12 * z(rng));
    alc.push_back(i >= 100 && i < 280 ? "" : (z(rng) > 0 ? ">=1" : "<1"));
    bili.push_back(i >= 300 && i < 400 ? NA : std::exp(-0.3 + 0.4 * z(rng)));
    occup.push_back(i >= 500 && i < 650 ? "" : occ[u3(rng)]);
    smoke.push_back(i >= 700 && i < 760 ? "" : smk[u3(rng)]);
    sbp.push_back(120 + 0.3 * age.back() + 10 * z(rng));
  }
  Table t;
  t.num("SBP", sbp).num("age", age).str("gender", gender).num("WC", wc).str("alc", alc).num("bili", bili)
      .str("occup", occup).str("smoke", smoke);
  return t;
}

// bmi ~ GESTBIR + ETHN + HEIGHT_M + SMOKE + hc + MARITAL + age with random
// ~ age | ID, 200 children x 5 visits. Group-level missing: SMOKE 24 >
// MARITAL 14 > ETHN 6 > HEIGHT_M 4 groups; hc (visit level) 40 rows.
inline Table mod7b_table() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> u3(0, 2);
  const int groups = 200, visits = 5;
  std::vector<double> id, bmi, gest, height, hc, age;
  std::vector<std::string> ethn, smoke, marital;
  const char* smk[] = {"never smoked", "smoked until pregnant", "continued smoking"};
  const char* mar[] = {"married", "partner", "single"};
  for (int g = 0; g < groups; ++g) {
    double gb = 39 + 1.5 * z(rng);
    double hm = (g >= 10 && g < 14) ? NA : 168 + 7 * z(rng);
    std::string et = (g >= 20 && g < 26) ? "" : (z(rng) > -0.5 ? "Caucasian" : "other");
    std::string sm = (g >= 40 && g < 64) ? "" : smk[u3(rng)];
    std::string ma = (g >= 80 && g < 94) ? "" : mar[u3(rng)];
    double b = z(rng);
    for (int v = 0; v < visits; ++v) {
      id.push_back(g + 1);
      gest.push_back(gb);
      height.push_back(hm);
      ethn.push_back(et);
      smoke.push_back(sm);
      marital.push_back(ma);
      double a = v * 0.5 + 0.1 * z(rng);
      age.push_back(a);
      int row = g * visits + v;
      hc.push_back(row % 25 == 3 ? NA : 35 + 4 * a + z(rng));
      bmi.push_back(16 + 0.2 * a + b + 0.5 * z(rng));
    }
  }
  Table t;
  t.num("ID", id).num("bmi", bmi).num("GESTBIR", gest).str("ETHN", ethn).num("HEIGHT_M", height)
      .str("SMOKE", smoke).num("hc", hc).str("MARITAL", marital).num("age", age);
  return t;
}

}  // namespace testsupport
