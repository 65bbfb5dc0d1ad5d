// Acceptance suite: the ten headline claims, one test per criterion, each
// printing a single pass/fail line with the measured residuals.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>

#include <moebius/verify.hpp>

using namespace moebius;

namespace {

class Acceptance : public ::testing::Test {
 protected:
  static const std::vector<CheckResult>& results() {
    static const std::vector<CheckResult> r = [] {
      VerifyConfig cfg;
      cfg.seed = 1;
      return run_verification(cfg);
    }();
    return r;
  }

  // all checks with one of the given prefixes must pass
  static void criterion(int index, const std::string& label,
                        const std::vector<std::string>& prefixes) {
    bool pass = true;
    std::string detail;
    for (const auto& r : results()) {
      for (const auto& p : prefixes) {
        if (r.name.rfind(p, 0) == 0) {
          pass = pass && r.pass;
          char buf[160];
          std::snprintf(buf, sizeof(buf), "%s %s=%.3g(tol %.0e)", r.pass ? "" : " FAIL:",
                        r.name.c_str(), r.residual, r.tolerance);
          detail += buf;
        }
      }
    }
    std::printf("[%s] criterion %2d: %s —%s\n", pass ? "PASS" : "FAIL", index, label.c_str(),
                detail.c_str());
    std::fflush(stdout);
    EXPECT_TRUE(pass) << label << detail;
  }
};

}  // namespace

TEST_F(Acceptance, Criterion01_ClosedFormGeodesicEndToEnd) {
  const auto start = std::chrono::steady_clock::now();
  VerifyConfig cfg;
  std::vector<CheckResult> fresh;
  check_geodesic_end_to_end(cfg, fresh);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool pass = secs <= 5.0;
  for (const auto& r : fresh) pass = pass && r.pass;
  std::printf("[%s] criterion  1: closed-form geodesic end-to-end — rms=%.3g(tol 1e-5) "
              "lightlike=%.3g(tol 1e-9) runtime=%.2fs(limit 5s)\n",
              pass ? "PASS" : "FAIL", fresh[1].residual, fresh[0].residual, secs);
  std::fflush(stdout);
  EXPECT_LE(secs, 5.0);
  EXPECT_TRUE(fresh[0].pass && fresh[1].pass);
}

TEST_F(Acceptance, Criterion02_ConservedQuantities) {
  criterion(2, "energy, first integrals, Lax conservation", {"conserved."});
}

TEST_F(Acceptance, Criterion03_SpectralIdentities) {
  criterion(3, "characteristic polynomial, interlacing, block diagonalization", {"spectral."});
}

TEST_F(Acceptance, Criterion04_EulerLagrangeCharacterization) {
  criterion(4, "geodesics pass, generic curves fail", {"euler_lagrange."});
}

TEST_F(Acceptance, Criterion05_CodimensionReduction) {
  criterion(5, "Q4 geodesic in Q6: rank, sigma gap, span drift", {"codim."});
}

TEST_F(Acceptance, Criterion06_ConformalInvariance) {
  criterion(6, "ds and mu_j under 50 Moebius motions", {"invariance."});
}

TEST_F(Acceptance, Criterion07_EuclideanBridge) {
  criterion(7, "helix density and mu1, trace invariants", {"bridge."});
}

TEST_F(Acceptance, Criterion08_TotalTwist) {
  criterion(8, "integer twist on spherical curves, Moebius invariance", {"twist."});
}

TEST_F(Acceptance, Criterion09_EllipticLayer) {
  criterion(9, "Jacobi identities, Lawden formula, AGM integral", {"elliptic."});
}

TEST_F(Acceptance, Criterion10_DegenerateBranches) {
  criterion(10, "constant-mu1 geodesics, C2 -> 0 continuity", {"degenerate."});
}
