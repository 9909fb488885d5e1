#include <cmath>
#include <sstream>

#include "fraq/model.hpp"

namespace fraq {

namespace {

double wrap(double x) {
  double r = std::fmod(x, kTwoPi);
  return r < 0.0 ? r + kTwoPi : r;
}

// Accepts plain decimals and multiples of pi: "pi", "2pi", "pi/4", "3pi/4".
double parse_number(const std::string& tok) {
  auto pos = tok.find("pi");
  try {
    if (pos == std::string::npos) {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    }
    double coef = pos == 0 ? 1.0 : std::stod(tok.substr(0, pos));
    double den = 1.0;
    auto rest = tok.substr(pos + 2);
    if (!rest.empty()) {
      if (rest[0] != '/') throw std::invalid_argument(tok);
      den = std::stod(rest.substr(1));
    }
    return coef * kPi / den;
  } catch (const std::exception&) {
    throw ValidationError("region: cannot parse number '" + tok + "'");
  }
}

std::vector<double> parse_list(const std::string& body) {
  std::vector<double> out;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_number(tok));
  return out;
}

bool in_arc(double x, double a, double b, bool closed) {
  if (b - a >= kTwoPi) return true;
  x = wrap(x);
  double lo = wrap(a);
  double hi = wrap(b);
  if (b - a > 0.0 && hi == 0.0 && b != a) hi = kTwoPi;
  if (lo < hi) return closed ? (x >= lo && x <= hi) : (x > lo && x < hi);
  return closed ? (x >= lo || x <= hi) : (x > lo || x < hi);
}

double periodic_delta(double x, double c) {
  double d = std::fmod(x - c, kTwoPi);
  if (d > kPi) d -= kTwoPi;
  if (d <= -kPi) d += kTwoPi;
  return d;
}

void check_coord(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0 || v > kTwoPi) {
    throw ValidationError(std::string("region: ") + what + " must lie in [0, 2pi]");
  }
}

bool contains_impl(const Region::Shape& shape, double x, double y, bool closed);

struct ContainsVisitor {
  double x, y;
  bool closed;
  bool operator()(const Region::Full&) const { return true; }
  bool operator()(const Interval& i) const { return in_arc(x, i.a, i.b, closed); }
  bool operator()(const Box& b) const {
    return in_arc(x, b.a1, b.b1, closed) && in_arc(y, b.a2, b.b2, closed);
  }
  bool operator()(const Ball& b) const {
    const double dx = periodic_delta(x, b.cx);
    const double dy = periodic_delta(y, b.cy);
    const double r2 = dx * dx + dy * dy;
    return closed ? r2 <= b.r * b.r : r2 < b.r * b.r;
  }
  bool operator()(const Region::Complement& c) const {
    return !contains_impl(c.inner->shape(), x, y, !closed);
  }
};

bool contains_impl(const Region::Shape& shape, double x, double y, bool closed) {
  return std::visit(ContainsVisitor{x, y, closed}, shape);
}

}  // namespace

Region::Region(Shape shape) : shape_(std::move(shape)) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Interval>) {
          check_coord(s.a, "interval endpoint");
          check_coord(s.b, "interval endpoint");
          if (s.a == s.b) throw ValidationError("region: empty interval");
        } else if constexpr (std::is_same_v<T, Box>) {
          for (double v : {s.a1, s.b1, s.a2, s.b2}) check_coord(v, "box bound");
          if (s.a1 == s.b1 || s.a2 == s.b2) throw ValidationError("region: empty box");
        } else if constexpr (std::is_same_v<T, Ball>) {
          check_coord(s.cx, "ball centre");
          check_coord(s.cy, "ball centre");
          if (!(s.r > 0.0) || s.r >= kPi) throw ValidationError("region: ball radius must be in (0, pi)");
        } else if constexpr (std::is_same_v<T, Complement>) {
          if (!s.inner) throw ValidationError("region: complement of nothing");
          if (s.inner->is_full()) throw ValidationError("region: complement of the full torus is empty");
        }
      },
      shape_);
}

Region Region::complement_of(Region r) {
  return Region(Complement{std::make_shared<const Region>(std::move(r))});
}

Region Region::parse(const std::string& text) {
  if (text == "full") return Region(Full{});
  auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("region: missing ':' in '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string body = text.substr(colon + 1);
  if (kind == "complement") return complement_of(parse(body));
  auto v = parse_list(body);
  if (kind == "interval") {
    if (v.size() != 2) throw ValidationError("region: interval needs 2 values");
    return Region(Interval{v[0], v[1]});
  }
  if (kind == "box") {
    if (v.size() != 4) throw ValidationError("region: box needs 4 values");
    return Region(Box{v[0], v[1], v[2], v[3]});
  }
  if (kind == "ball") {
    if (v.size() != 3) throw ValidationError("region: ball needs 3 values");
    return Region(Ball{v[0], v[1], v[2]});
  }
  throw ValidationError("region: unknown kind '" + kind + "'");
}

int Region::dim() const noexcept {
  return std::visit(
      [](const auto& s) -> int {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Interval>) return 1;
        else if constexpr (std::is_same_v<T, Box> || std::is_same_v<T, Ball>) return 2;
        else if constexpr (std::is_same_v<T, Complement>) return s.inner->dim();
        else return 0;
      },
      shape_);
}

bool Region::contains(double x, double y) const noexcept { return contains_impl(shape_, x, y, false); }

std::string Region::to_string() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Full>) os << "full";
        else if constexpr (std::is_same_v<T, Interval>) os << "interval:" << s.a << ',' << s.b;
        else if constexpr (std::is_same_v<T, Box>)
          os << "box:" << s.a1 << ',' << s.b1 << ',' << s.a2 << ',' << s.b2;
        else if constexpr (std::is_same_v<T, Ball>) os << "ball:" << s.cx << ',' << s.cy << ',' << s.r;
        else os << "complement:" << s.inner->to_string();
      },
      shape_);
  return os.str();
}

}  // namespace fraq
