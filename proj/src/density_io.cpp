#include "qcdlab/density_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qcdlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw std::invalid_argument("density json: field '" + field + "': " + why);
}

std::pair<double, double> parse_support(const json& j) {
    if (!j.contains("support")) fail("support", "missing");
    const auto& s = j["support"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
        fail("support", "expected [a, b]");
    const double a = s[0].get<double>(), b = s[1].get<double>();
    if (!(b > a)) fail("support", "needs b > a");
    return {a, b};
}

} // namespace

GridDensity density_from_json(const std::string& text, std::size_t default_samples) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("density json: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("density json: expected an object");

    if (j.contains("model")) {
        const auto& m = j["model"];
        for (const char* field : {"K", "N", "u0", "slope0"})
            if (!m.contains(field) || !m[field].is_number()) fail(field, "missing number");
        const auto [a, b] = parse_support(m);
        std::size_t samples = default_samples;
        if (m.contains("samples")) {
            if (!m["samples"].is_number_integer() || m["samples"].get<long long>() < 2)
                fail("samples", "expected an integer count >= 2");
            samples = std::size_t(m["samples"].get<long long>());
        }
        ModelDensity model(CurvatureParams(m["K"].get<double>(), m["N"].get<double>()), a, b,
                           m["u0"].get<double>(), m["slope0"].get<double>());
        return model.sample(samples);
    }

    const auto [a, b] = parse_support(j);
    if (!j.contains("values")) fail("values", "missing");
    const auto& v = j["values"];
    if (!v.is_array() || v.size() < 2) fail("values", "expected an array of at least 2 numbers");
    std::vector<double> values;
    values.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) fail("values", "non-numeric entry");
        values.push_back(x.get<double>());
    }
    return GridDensity(a, b, std::move(values));
}

GridDensity load_density_file(const std::string& path, std::size_t default_samples) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open density file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return density_from_json(ss.str(), default_samples);
}

std::string density_to_json(const GridDensity& h, int indent) {
    json j;
    j["support"] = {h.a(), h.b()};
    j["values"] = h.values();
    return j.dump(indent);
}

} // namespace qcdlab
