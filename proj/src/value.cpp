#include "irmpcc/value.hpp"

#include <charconv>

#include "irmpcc/error.hpp"

namespace irm {

bool value_equal(const Value& a, const Value& b) { return value_compare(a, b) == 0; }

std::strong_ordering value_compare(const Value& a, const Value& b) {
  if (a.index() != b.index()) return a.index() <=> b.index();
  return std::visit(
      [&](const auto& x) -> std::strong_ordering {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, std::shared_ptr<const PairValue>>) {
          if (auto c = value_compare(x->first, y->first); c != 0) return c;
          return value_compare(x->second, y->second);
        } else if constexpr (std::is_same_v<T, std::string>) {
          int c = x.compare(y);
          return c < 0 ? std::strong_ordering::less
                       : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
        } else {
          return x <=> y;
        }
      },
      a);
}

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string to_string(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Bottom>) return "bot";
        else if constexpr (std::is_same_v<T, Null>) return "null";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, std::string>) return quote_string(x);
        else if constexpr (std::is_same_v<T, Loc>) return "@" + std::to_string(x.id);
        else return "(pair " + to_string(x->first) + " " + to_string(x->second) + ")";
      },
      v);
}

namespace {

std::string unquote(const std::string& text) {
  if (text.size() < 2 || text.front() != '"' || text.back() != '"')
    throw Error("malformed string literal " + text);
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    char c = text[i];
    if (c == '\\' && i + 2 < text.size()) {
      char n = text[++i];
      out += n == 'n' ? '\n' : (n == 't' ? '\t' : n);
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

Value parse_value(const std::string& text) {
  if (text.empty()) throw Error("empty value");
  if (text == "null") return Null{};
  if (text == "bot") return Bottom{};
  if (text == "true") return make_int(1);
  if (text == "false") return make_int(0);
  if (text.front() == '"') return unquote(text);
  if (text.front() == '@') {
    std::uint32_t id = 0;
    auto [p, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), id);
    if (ec != std::errc{} || p != text.data() + text.size())
      throw Error("malformed location " + text);
    return Loc{id};
  }
  std::int64_t n = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc{} || p != text.data() + text.size()) throw Error("malformed value " + text);
  return n;
}

}  // namespace irm
