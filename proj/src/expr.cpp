#include "dfi/expr.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

namespace dfi {

namespace {

enum class Kind { constant, coord, add, mul, pow, exp, log, sin, cos, tan, abs2, re, im };

struct Node {
    Kind kind = Kind::constant;
    cplx value = 0.0;
    int index = 0;
    bool conj = false;
    std::vector<std::shared_ptr<const Node>> args;
};
using NodePtr = std::shared_ptr<const Node>;

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw ConfigError((where.empty() ? std::string("/") : where) + ": " + what);
}

std::optional<cplx> constant_of(const nlohmann::json& j, const std::string& where)
{
    if (j.is_number()) return cplx(j.get<double>());
    if (!j.is_object() || !j.contains("const")) return std::nullopt;
    if (j.size() != 1) fail(where, "a const node takes no other fields");
    const auto& v = j["const"];
    if (v.is_number()) return cplx(v.get<double>());
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
    fail(where + "/const", "expected a number or [re, im]");
}

NodePtr parse(const nlohmann::json& j, int n, const std::string& where)
{
    auto node = std::make_shared<Node>();
    if (auto c = constant_of(j, where)) {
        node->value = *c;
        return node;
    }
    if (!j.is_object()) fail(where, "expected a number or an object");
    if (j.contains("coord")) {
        for (const auto& [key, _] : j.items())
            if (key != "coord" && key != "conj") fail(where, "unknown field '" + key + "' in coord node");
        if (!j["coord"].is_number_integer()) fail(where + "/coord", "expected an integer");
        const int idx = j["coord"].get<int>();
        if (idx < 1 || idx > n) fail(where + "/coord", "index " + std::to_string(idx) + " outside 1.." + std::to_string(n));
        node->kind = Kind::coord;
        node->index = idx - 1;
        if (j.contains("conj")) {
            if (!j["conj"].is_boolean()) fail(where + "/conj", "expected true or false");
            node->conj = j["conj"].get<bool>();
        }
        return node;
    }
    if (!j.contains("op")) fail(where, "expected one of 'const', 'coord', 'op'");
    for (const auto& [key, _] : j.items())
        if (key != "op" && key != "args") fail(where, "unknown field '" + key + "' in op node");
    if (!j["op"].is_string()) fail(where + "/op", "expected a string");
    const std::string op = j["op"].get<std::string>();
    static const std::vector<std::pair<std::string, Kind>> table = {
        {"add", Kind::add}, {"+", Kind::add}, {"mul", Kind::mul}, {"*", Kind::mul}, {"pow", Kind::pow},
        {"exp", Kind::exp}, {"log", Kind::log}, {"sin", Kind::sin}, {"cos", Kind::cos}, {"tan", Kind::tan},
        {"abs2", Kind::abs2}, {"re", Kind::re}, {"im", Kind::im}};
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == op; });
    if (it == table.end()) fail(where + "/op", "unknown op '" + op + "'");
    node->kind = it->second;
    if (!j.contains("args") || !j["args"].is_array()) fail(where, "op '" + op + "' needs an 'args' array");
    const auto& args = j["args"];
    const std::size_t want = node->kind == Kind::add || node->kind == Kind::mul ? 0 : node->kind == Kind::pow ? 2 : 1;
    if (want == 0 ? args.empty() : args.size() != want)
        fail(where + "/args", "op '" + op + "' takes " + (want == 0 ? std::string("at least 1") : std::to_string(want)) +
                                  " argument(s), got " + std::to_string(args.size()));
    if (node->kind == Kind::pow) {
        auto e = constant_of(args[1], where + "/args/1");
        if (!e) fail(where + "/args/1", "the exponent of pow must be a constant");
        node->value = *e;
        node->args.push_back(parse(args[0], n, where + "/args/0"));
        return node;
    }
    for (std::size_t i = 0; i < args.size(); ++i) node->args.push_back(parse(args[i], n, where + "/args/" + std::to_string(i)));
    return node;
}

Jet eval(const Node& node, const ComplexCoords& c, int dim)
{
    switch (node.kind) {
    case Kind::constant: return Jet::constant(dim, node.value);
    case Kind::coord: return node.conj ? c.zbar[node.index] : c.z[node.index];
    case Kind::add: {
        Jet acc = eval(*node.args[0], c, dim);
        for (std::size_t i = 1; i < node.args.size(); ++i) acc += eval(*node.args[i], c, dim);
        return acc;
    }
    case Kind::mul: {
        Jet acc = eval(*node.args[0], c, dim);
        for (std::size_t i = 1; i < node.args.size(); ++i) acc *= eval(*node.args[i], c, dim);
        return acc;
    }
    case Kind::pow: {
        const double re = node.value.real();
        if (node.value.imag() == 0.0 && re == std::round(re) && std::abs(re) <= 64)
            return pow(eval(*node.args[0], c, dim), static_cast<int>(re));
        return pow(eval(*node.args[0], c, dim), node.value);
    }
    case Kind::exp: return exp(eval(*node.args[0], c, dim));
    case Kind::log: return log(eval(*node.args[0], c, dim));
    case Kind::sin: return sin(eval(*node.args[0], c, dim));
    case Kind::cos: return cos(eval(*node.args[0], c, dim));
    case Kind::tan: return tan(eval(*node.args[0], c, dim));
    case Kind::abs2: return abs2(eval(*node.args[0], c, dim));
    case Kind::re: return eval(*node.args[0], c, dim).real();
    case Kind::im: return eval(*node.args[0], c, dim).imag();
    }
    throw std::logic_error("unreachable expression kind");
}

}  // namespace

JetExpr compile_expr(const nlohmann::json& node, int n, const std::string& where)
{
    if (n < 1) throw ConfigError(where + ": dimension must be positive");
    NodePtr root = parse(node, n, where);
    return [root](std::span<const Jet> x) {
        ComplexCoords c(x);
        return eval(*root, c, static_cast<int>(x.size()));
    };
}

}  // namespace dfi
