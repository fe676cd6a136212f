#pragma once

/// \file expr.hpp
/// \brief JSON expression trees for user-supplied defining functions and metrics.
///
/// Grammar:
///   expr := number                          real constant
///         | {"const": number}               real constant
///         | {"const": [re, im]}             complex constant
///         | {"coord": j}                    z_j, 1-based
///         | {"coord": j, "conj": true}      conj(z_j)
///         | {"op": name, "args": [expr...]}
///   name := "add" | "+" | "mul" | "*"        one or more args
///         | "pow"                            two args, the exponent a constant
///         | "exp" | "log" | "sin" | "cos" | "tan" | "abs2" | "re" | "im"   one arg

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dfi/field.hpp"

namespace dfi {

/// Schema violation; the message starts with the JSON pointer of the offending node.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Compiles an expression over C^n.  `where` prefixes diagnostics.
JetExpr compile_expr(const nlohmann::json& node, int n, const std::string& where = "");

}  // namespace dfi
