#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "cbfed/config.hpp"
#include "cbfed/io.hpp"
#include "test_util.hpp"

using namespace cbfed;
using cbfed::test::make_grid;
using cbfed::test::random_field;

namespace {
const char* kMinimalDoc = R"({
  "params": {"mu": 1.0, "alpha": 1.0, "beta": 1.0, "gamma": -0.5, "r": 5.0, "q": 2.0,
             "period": 1.0, "dim": 2, "box_length": 6.283185307179586},
  "grid": {"n_per_axis": 16}
})";
} // namespace

TEST_CASE("config parsing") {
    SUBCASE("minimal document fills documented defaults") {
        auto cfg = parse_config(kMinimalDoc);
        CHECK(cfg.n_per_axis == 16);
        CHECK(cfg.dealias_fraction == doctest::Approx(2.0 / 3.0));
        CHECK(cfg.integrator.n_steps == 1024);
        CHECK(cfg.integrator.galerkin_cutoff == 25); // inscribed ball of the band
        CHECK(cfg.solver.mode == SolverConfig::Mode::periodic);
        CHECK(cfg.solver.tol == 1e-9);
        CHECK(cfg.output_dir == "out");
    }

    SUBCASE("invariant violations carry the parameter message") {
        std::string doc = kMinimalDoc;
        auto pos = doc.find("\"r\": 5.0, \"q\": 2.0");
        doc.replace(pos, 18, "\"r\": 2.0, \"q\": 3.0");
        CHECK_THROWS_WITH_AS(parse_config(doc), "params: r must exceed q", std::invalid_argument);
    }

    SUBCASE("unknown keys are rejected with the exact path") {
        std::string doc = R"({
          "params": {"mu": 1.0, "alpha": 1.0, "beta": 1.0, "gamma": 0.0, "r": 3.0, "q": 1.0,
                     "period": 1.0, "dim": 2, "turbo": true},
          "grid": {"n_per_axis": 16}
        })";
        CHECK_THROWS_WITH_AS(parse_config(doc), "params.turbo: unknown key", ConfigError);
        std::string doc2 = R"({
          "params": {"mu": 1.0, "alpha": 1.0, "beta": 1.0, "gamma": 0.0, "r": 3.0, "q": 1.0},
          "grid": {"n_per_axis": 16},
          "solver": {"mode": "periodic", "tolerance": 1e-8}
        })";
        CHECK_THROWS_WITH_AS(parse_config(doc2), "solver.tolerance: unknown key", ConfigError);
    }

    SUBCASE("emit then parse is the identity") {
        std::string doc = R"({
          "params": {"mu": 0.7, "alpha": 1.2, "beta": 0.9, "gamma": -0.3, "r": 4.0, "q": 1.5,
                     "period": 2.0, "dim": 2, "box_length": 3.141592653589793},
          "grid": {"n_per_axis": 32, "dealias_fraction": 0.5},
          "integrator": {"n_steps": 512, "galerkin_cutoff": 9, "state_cadence": 4},
          "forcing": {"profiles": [
            {"k": [1, 0], "amplitude": [[0.0, 0.0], [0.4, -0.1]], "harmonics": [[0, 0.2, 0.0], [2, 0.1, 0.3]]}
          ]},
          "solver": {"mode": "picard", "tol": 1e-8, "max_iter": 25, "acceleration": "anderson"},
          "output": {"directory": "picard_out"}
        })";
        auto cfg = parse_config(doc);
        std::string emitted = emit_config(cfg);
        auto cfg2 = parse_config(emitted);
        CHECK(emit_config(cfg2) == emitted);
        CHECK(cfg2.solver.mode == SolverConfig::Mode::picard);
        CHECK(cfg2.forcing.profiles.size() == 1);
        CHECK(cfg2.forcing.profiles[0].temporal.size() == 3);
    }

    SUBCASE("random forcing block") {
        std::string doc = R"({
          "params": {"mu": 1.0, "alpha": 1.0, "beta": 1.0, "gamma": 0.0, "r": 3.0, "q": 1.0},
          "grid": {"n_per_axis": 16},
          "forcing": {"random": {"seed": 42, "amplitude": 0.25, "k2_max": 2, "harmonic_cutoff": 1}}
        })";
        auto cfg = parse_config(doc);
        CHECK(cfg.forcing.is_random);
        auto grid = cfg.make_grid();
        auto spec = cfg.forcing.materialize(grid, cfg.params.period);
        CHECK_FALSE(spec.empty());
        // normalized: sup_t ||f||_H equals the requested amplitude
        double sup = 0.0;
        for (int i = 0; i < 64; ++i)
            sup = std::max(sup, h_norm(build_forcing(grid, spec, 1.0, i / 64.0)));
        CHECK(sup == doctest::Approx(0.25).epsilon(1e-2));
        // same seed, same draw
        auto spec2 = cfg.forcing.materialize(grid, cfg.params.period);
        REQUIRE(spec.profiles.size() == spec2.profiles.size());
        for (std::size_t i = 0; i < spec.profiles.size(); ++i)
            CHECK(spec.profiles[i].amplitude[0] == spec2.profiles[i].amplitude[0]);
    }
}

TEST_CASE("forcing periodicity") {
    auto cfg = parse_config(kMinimalDoc);
    auto grid = cfg.make_grid();
    ModalProfile prof;
    prof.k = {1, 0, 0};
    prof.amplitude = {Complex(0, 0), Complex(0.5, 0.2), Complex(0, 0)};
    prof.temporal = {Complex(0.1, 0.0), Complex(0.3, -0.2)};
    ForcingSpec spec;
    spec.profiles.push_back(prof);

    SUBCASE("empty spec is zero at all times") {
        CHECK(h_norm(build_forcing(grid, ForcingSpec{}, 1.0, 0.123)) == 0.0);
    }

    SUBCASE("constant-in-time profile is time independent") {
        ForcingSpec c;
        c.profiles.push_back(prof);
        c.profiles[0].temporal = {Complex(0.7, 0.0)};
        auto f1 = build_forcing(grid, c, 1.0, 0.0);
        auto f2 = build_forcing(grid, c, 1.0, 0.77);
        CHECK(h_norm(f1 - f2) < 1e-15);
    }

    SUBCASE("shift by one period is bitwise identical") {
        for (double t : {0.0, 0.25, 0.375, 0.625}) {
            auto f1 = build_forcing(grid, spec, 1.0, t);
            auto f2 = build_forcing(grid, spec, 1.0, t + 1.0);
            for (int c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < grid->total(); ++i)
                    CHECK(f1.coeff(c, i) == f2.coeff(c, i));
        }
    }

    SUBCASE("non-orthogonal amplitude is auto-projected") {
        ForcingSpec bad;
        bad.profiles.push_back(prof);
        bad.profiles[0].amplitude = {Complex(1.0, 0.0), Complex(0.5, 0.0), Complex(0, 0)};
        auto touched = bad.project_amplitudes();
        CHECK(touched.size() == 1);
        CHECK(std::abs(bad.profiles[0].amplitude[0]) < 1e-14); // k = e1 kills component 0
        auto f = build_forcing(grid, bad, 1.0, 0.3);
        CHECK(divergence_defect(f) < 1e-13);
    }
}

TEST_CASE("diagnostics CSV") {
    auto cfg = parse_config(kMinimalDoc);
    auto grid = cfg.make_grid();
    PhysicalParams p = cfg.params;
    auto dir = std::filesystem::temp_directory_path() / "cbfed_io_test";
    std::filesystem::create_directories(dir);

    SUBCASE("empty trajectory writes a header-only file") {
        Trajectory t;
        auto path = (dir / "empty.csv").string();
        write_diagnostics(t, p, path);
        std::ifstream in(path);
        std::string line;
        int lines = 0;
        while (std::getline(in, line))
            ++lines;
        CHECK(lines == 1);
    }

    SUBCASE("n rows give n+1 lines and survive a round trip") {
        SpectralField v0(grid);
        v0.set_mode({1, 0, 0}, {Complex(0, 0), Complex(0.3, 0.0), Complex(0, 0)});
        v0.set_divergence_free(true);
        IntegratorConfig icfg;
        icfg.n_steps = 32;
        icfg.galerkin_cutoff = 4;
        auto traj = integrate_period(v0, p, ForcingSpec{}, icfg);
        auto path = (dir / "diag.csv").string();
        write_diagnostics(traj, p, path);

        std::ifstream in(path);
        std::string line;
        int lines = 0;
        while (std::getline(in, line))
            ++lines;
        CHECK(lines == static_cast<int>(traj.diag.size()) + 1);

        auto rows = read_csv(path);
        REQUIRE(rows.size() == traj.diag.size());
        double sum_file = 0, sum_mem = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            sum_file += rows[i][1];
            sum_mem += traj.diag[i].h;
        }
        CHECK(sum_file == doctest::Approx(sum_mem).epsilon(1e-12));
    }

    SUBCASE("unwritable path is surfaced with context") {
        Trajectory t;
        CHECK_THROWS_AS(write_diagnostics(t, p, "/nonexistent_dir_xyz/of.csv"), IoError);
    }
}

TEST_CASE("binary checkpoints") {
    auto grid = make_grid(2, 16);
    auto dir = std::filesystem::temp_directory_path() / "cbfed_io_test";
    std::filesystem::create_directories(dir);

    SUBCASE("zero and random fields round trip bit-exactly") {
        SplitMix64 rng(7);
        for (int trial = 0; trial < 2; ++trial) {
            SpectralField f =
                trial == 0 ? SpectralField::zero(grid) : leray_project(random_field(grid, rng));
            auto path = (dir / ("ckpt" + std::to_string(trial) + ".bin")).string();
            write_checkpoint(f, path);
            auto g = read_checkpoint(path);
            CHECK(g.grid().n() == grid->n());
            CHECK(g.grid().box_length() == grid->box_length());
            for (int c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < grid->total(); ++i)
                    CHECK(f.coeff(c, i) == g.coeff(c, i));
            // the flag is not stored; it is re-derived from the coefficients
            CHECK(g.divergence_free() == (divergence_defect(f) <= 1e-12));
        }
    }

    SUBCASE("3d field round trip") {
        auto g3 = make_grid(3, 8);
        SplitMix64 rng(9);
        auto f = leray_project(random_field(g3, rng, 2));
        auto path = (dir / "ckpt3d.bin").string();
        write_checkpoint(f, path);
        auto g = read_checkpoint(path);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < g3->total(); ++i)
                CHECK(f.coeff(c, i) == g.coeff(c, i));
    }

    SUBCASE("corrupted header is reported") {
        auto path = (dir / "bad.bin").string();
        std::ofstream out(path, std::ios::binary);
        out << "NOTMAGIC and some garbage";
        out.close();
        CHECK_THROWS_WITH_AS(read_checkpoint(path),
                             ("checkpoint header mismatch in '" + path + "'").c_str(), IoError);
    }
}

TEST_CASE("manifest digest is stable and excludes wall time") {
    auto cfg = parse_config(kMinimalDoc);
    RunManifest m1;
    m1.config = cfg;
    m1.report.converged = true;
    m1.report.iterations = 3;
    m1.report.residual_history = {1.0, 0.1, 0.01};
    m1.wall_time_seconds = 1.23;
    RunManifest m2 = m1;
    m2.wall_time_seconds = 99.9;
    CHECK(m1.digest() == m2.digest());
    m2.report.iterations = 4;
    CHECK(m1.digest() != m2.digest());
}
