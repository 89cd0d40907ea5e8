#pragma once

#include <string>
#include <string_view>

#include "irmpcc/bytecode.hpp"

namespace irm {

/// Parses the textual assembly format and validates the result.
///
/// Syntax errors raise ParseError with the offending line and column;
/// structural problems (dangling targets, unresolved references, cycles)
/// raise ValidationError.
Program parse_program(std::string_view text);

/// Prints a program so that parse_program(print_program(p)) == p.
std::string print_program(const Program& program);

}  // namespace irm
