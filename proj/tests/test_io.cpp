#include <gtest/gtest.h>

#include <filesystem>

#include "cubic/io.hpp"
#include "cubic/measurement.hpp"
#include "cubic/states.hpp"

using namespace cubic;
namespace fs = std::filesystem;

TEST(Format, RoundTripsDoubles) {
    for (double v : {0.0, -1.0, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.1}) EXPECT_EQ(std::stod(io::fmt(v)), v);
}

TEST(Hashing, StableAndSensitive) {
    EXPECT_EQ(io::hash_string(""), "cbf29ce484222325");
    EXPECT_EQ(io::hash_string("a"), "af63dc4c8601ec8c");
    EXPECT_NE(io::hash_string("ab"), io::hash_string("ba"));
    Mat m = Mat::Identity(3, 3);
    const std::string h = io::hash_matrix(m);
    EXPECT_EQ(h, io::hash_matrix(m));
    m(1, 2) = cplx(0.0, 1e-17);
    EXPECT_NE(h, io::hash_matrix(m));
}

TEST(SamplesCsv, RoundTrip) {
    SampleBatch b = postselect(sample_heterodyne(coherent(0.4, 32), 200, 3), 2, 4);
    const std::string text = io::samples_csv(b);
    const SampleBatch back = io::parse_samples_csv(text);
    EXPECT_EQ(back.samples, b.samples);
    EXPECT_EQ(io::samples_csv(back), text);
}

TEST(SamplesCsv, Diagnostics) {
    EXPECT_THROW(io::parse_samples_csv("a,b,c\n1,2,1\n"), ConfigError);
    try {
        io::parse_samples_csv("x,p,accepted\n1,2,1\n1,oops,0\n", "data.csv");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("data.csv:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(io::parse_samples_csv("x,p,accepted\n1,2\n"), ConfigError);
    EXPECT_THROW(io::parse_samples_csv("x,p,accepted\n1,2,yes\n"), ConfigError);
    EXPECT_THROW(io::parse_samples_csv("x,p,accepted\n1.5x,2,1\n"), ConfigError);
    // blank lines and CRLF endings are tolerated
    const SampleBatch ok = io::parse_samples_csv("x,p,accepted\r\n1,2,1\r\n\r\n-3,4,0\r\n");
    ASSERT_EQ(ok.samples.size(), 2u);
    EXPECT_EQ(ok.samples[1], (HeterodyneSample{-3.0, 4.0, false}));
}

TEST(DensityJson, RoundTripIsExact) {
    Mat m = 0.7 * DensityMatrix::pure(photon_added_coherent(cplx(0.3, -0.2), 2, 12)).mat() +
            0.3 * DensityMatrix::pure(fock(1, 12)).mat();
    const DensityMatrix rho(m);
    const io::json j = io::density_json(rho);
    EXPECT_EQ(j["dim"], 12);
    const DensityMatrix back = io::density_from_json(io::parse_json(j.dump(), "rho"));
    EXPECT_EQ(back.mat(), rho.mat());
}

TEST(DensityJson, Errors) {
    EXPECT_THROW(io::parse_json("{bad", "x"), ConfigError);
    EXPECT_THROW(io::density_from_json(io::json{{"dim", 2}}), ConfigError);
    EXPECT_THROW(io::density_from_json(io::json::parse(R"({"dim":2,"re":[[1,0]],"im":[[0,0],[0,0]]})")), ConfigError);
    // trace 2 violates the density-matrix contract
    EXPECT_THROW(io::density_from_json(io::json::parse(R"({"dim":2,"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]})")),
                 ConfigError);
    EXPECT_NO_THROW(io::density_from_json(io::json::parse(R"({"dim":2,"re":[[0.5,0],[0,0.5]],"im":[[0,0],[0,0]]})")));
}

TEST(Files, WriteAndRead) {
    const fs::path dir = fs::temp_directory_path() / "cubic_io_test";
    fs::remove_all(dir);
    const fs::path file = dir / "nested" / "rho.json";
    io::write_json(file, io::density_json(DensityMatrix::pure(vacuum(3))));
    EXPECT_EQ(io::read_density(file).mat(), DensityMatrix::pure(vacuum(3)).mat());
    EXPECT_EQ(io::hash_file(file), io::hash_string(io::read_text(file)));
    EXPECT_THROW(io::read_text(dir / "missing.json"), ConfigError);
    fs::remove_all(dir);
}

TEST(Tables, Layout) {
    EXPECT_EQ(io::photon_csv({0.5, 0.25}), "n,p\n0,0.5\n1,0.25\n");
    EXPECT_EQ(io::islands_json({{0, 3}, {5, 5}}).dump(), "[[0,3],[5,5]]");
    WignerGrid g;
    g.x_axis = {0.0, 1.0};
    g.p_axis = {2.0};
    g.values = Eigen::MatrixXd::Constant(2, 1, 0.5);
    EXPECT_EQ(io::wigner_csv(g), "x,p,w\n0,2,0.5\n1,2,0.5\n");
}

TEST(SearchJson, RoundTripAndErrors) {
    SearchConfig s;
    s.disp_re = {-1.0, 1.0, 0.5};
    s.rot = GridAxis::single(0.0);
    s.refinements = 2;
    const SearchConfig back = io::search_from_json(io::search_json(s));
    EXPECT_EQ(back.disp_re.values(), s.disp_re.values());
    EXPECT_EQ(back.rot.values(), std::vector<double>{0.0});
    EXPECT_EQ(back.refinements, 2);
    EXPECT_EQ(io::search_from_json(io::json{{"squeeze_r", 0.3}}).squeeze_r.values(), std::vector<double>{0.3});
    EXPECT_THROW(io::search_from_json(io::json{{"disp_re", "wide"}}), ConfigError);
    EXPECT_THROW(io::search_from_json(io::json{{"refinements", -1}}), ConfigError);
    EXPECT_THROW(io::search_from_json(io::json::array()), ConfigError);
}

TEST(StateSpec, Kinds) {
    EXPECT_EQ(io::parse_state("vacuum", 8).amps(), vacuum(8).amps());
    EXPECT_EQ(io::parse_state("fock:2", 8).amps(), fock(2, 8).amps());
    EXPECT_EQ(io::parse_state("coherent:0.5", 32).amps(), coherent(0.5, 32).amps());
    EXPECT_EQ(io::parse_state("coherent:0,-0.97", 32).amps(), coherent(cplx(0.0, -0.97), 32).amps());
    EXPECT_EQ(io::parse_state("pacs:0,-0.97,3", 40).amps(), photon_added_coherent(cplx(0.0, -0.97), 3, 40).amps());
    EXPECT_EQ(io::parse_state("cubic:0.4", 64).amps(), cubic_phase_state(0.4, 0.0, 64, 1.0).state.amps());
    EXPECT_EQ(io::parse_state("perturbative:0.05", 8).amps(), perturbative_cubic(0.05, 8).amps());
}

TEST(StateSpec, Errors) {
    EXPECT_THROW(io::parse_state("squeezed:0.3", 8), ConfigError);
    EXPECT_THROW(io::parse_state("fock", 8), ConfigError);
    EXPECT_THROW(io::parse_state("fock:1.5", 8), ConfigError);
    EXPECT_THROW(io::parse_state("fock:-1", 8), ConfigError);
    EXPECT_THROW(io::parse_state("pacs:1,2", 8), ConfigError);
    EXPECT_THROW(io::parse_state("coherent:abc", 8), ConfigError);
    EXPECT_THROW(io::parse_state("vacuum:1", 8), ConfigError);
    EXPECT_THROW(io::parse_state("fock:9", 8), OutOfRange);
}
