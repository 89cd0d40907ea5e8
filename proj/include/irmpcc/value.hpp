#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>

namespace irm {

/// The undefined value; only ever produced by assertion evaluation and ghost state.
struct Bottom {
  auto operator<=>(const Bottom&) const = default;
};

struct Null {
  auto operator<=>(const Null&) const = default;
};

/// A typed heap location. The class lives in the heap, not in the value.
struct Loc {
  std::uint32_t id = 0;
  auto operator<=>(const Loc&) const = default;
};

struct PairValue;

using Value = std::variant<Bottom, Null, std::int64_t, std::string, Loc,
                           std::shared_ptr<const PairValue>>;

struct PairValue {
  Value first;
  Value second;
};

inline Value make_int(std::int64_t v) { return Value{v}; }
inline Value make_str(std::string s) { return Value{std::move(s)}; }
inline Value make_bool(bool b) { return Value{std::int64_t{b ? 1 : 0}}; }
inline Value bottom() { return Value{Bottom{}}; }

inline bool is_bottom(const Value& v) { return std::holds_alternative<Bottom>(v); }
inline bool is_int(const Value& v) { return std::holds_alternative<std::int64_t>(v); }
inline bool is_loc(const Value& v) { return std::holds_alternative<Loc>(v); }

/// Structural equality; two bottoms are equal (Kleene identity).
bool value_equal(const Value& a, const Value& b);

/// Total order used for canonical forms. Orders by alternative, then content.
std::strong_ordering value_compare(const Value& a, const Value& b);

/// Renders a value as it appears in traces and oracle scripts:
/// `5`, `"str"`, `null`, `@3`, `bot`, `(pair a b)`.
std::string to_string(const Value& v);

/// Inverse of to_string for the scalar forms (`bot` and pairs excluded).
/// Throws irm::Error on malformed text.
Value parse_value(const std::string& text);

std::string quote_string(const std::string& s);

}  // namespace irm
