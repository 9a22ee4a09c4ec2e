#include "jetgf/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <system_error>

#include "jetgf/errors.hpp"

namespace jetgf {
namespace detail {

enum class Op : std::uint8_t {
  Const,
  VarT,
  VarQ,
  VarP,
  VarZ,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,     // general power, base must stay positive
  PowInt,  // integer exponent folded at parse time
  Sin,
  Cos,
  Exp,
  Log,
  Tanh,
  Sqrt,
  Sabs,
  Cutoff,  // multiply child by the radial bump chi(|(q,p,z)|; R0, w)
};

struct Instr {
  Op op;
  std::int32_t a = -1;  // child slots
  std::int32_t b = -1;
  double c0 = 0.0;  // Const value / Cutoff R0 / PowInt exponent
  double c1 = 0.0;  // Cutoff w
  std::int32_t var = 0;           // coordinate index for VarQ / VarP
  std::uint32_t offset = 0;       // byte offset in the source, for errors
};

struct Program {
  std::vector<Instr> code;  // post-order; the last instruction is the root
  int dim = 0;
};

namespace {

constexpr double kSabsEps2 = 1e-6;  // sabs(x) = sqrt(x^2 + 1e-6)

struct Scratch {
  std::vector<double> val;
  std::vector<double> grad;  // lanes: (q_0..q_{n-1}, p_0..p_{n-1}, z)
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

[[noreturn]] void domain_error(const char* msg, const Instr& in) {
  throw EvalDomainError(msg, in.offset);
}

// Smooth step sigma(u) = exp(-1/u) for u > 0, else 0; underflows to exact 0
// near u = 0+, which is what makes the bump exactly 0/1 outside the collar.
inline double sigma(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
inline double sigma_prime(double u) {
  if (u <= 0.0) return 0.0;
  const double s = std::exp(-1.0 / u);
  return s / (u * u);
}

struct Bump {
  double chi;
  double dchi_dr;
};

Bump bump(double r, double R0, double w) {
  const double u1 = (R0 + w - r) / w;
  const double u2 = (r - R0) / w;
  const double a = sigma(u1);
  const double b = sigma(u2);
  const double da = -sigma_prime(u1) / w;
  const double db = sigma_prime(u2) / w;
  const double denom = a + b;
  return {a / denom, (da * b - a * db) / (denom * denom)};
}

}  // namespace

// Evaluates the tape; grad == nullptr skips all derivative work.
double eval_program(const Program& prog, double t, const double* q, const double* p, double z,
                    double* grad_out) {
  const int n = prog.dim;
  const int lanes = 2 * n + 1;
  const std::size_t m = prog.code.size();
  Scratch& s = scratch();
  s.val.resize(m);
  const bool want_grad = grad_out != nullptr;
  if (want_grad) s.grad.assign(m * lanes, 0.0);

  double* val = s.val.data();
  double* grad = want_grad ? s.grad.data() : nullptr;
  auto g = [&](std::size_t i) { return grad + i * lanes; };

  for (std::size_t i = 0; i < m; ++i) {
    const Instr& in = prog.code[i];
    const double av = in.a >= 0 ? val[in.a] : 0.0;
    const double bv = in.b >= 0 ? val[in.b] : 0.0;
    const double* ag = (want_grad && in.a >= 0) ? g(in.a) : nullptr;
    const double* bg = (want_grad && in.b >= 0) ? g(in.b) : nullptr;
    double v = 0.0;
    double da = 0.0, db = 0.0;  // d out / d child, for the generic chain rule
    bool chain = want_grad;

    switch (in.op) {
      case Op::Const: v = in.c0; chain = false; break;
      case Op::VarT: v = t; chain = false; break;
      case Op::VarQ:
        v = q[in.var];
        if (want_grad) g(i)[in.var] = 1.0;
        chain = false;
        break;
      case Op::VarP:
        v = p[in.var];
        if (want_grad) g(i)[n + in.var] = 1.0;
        chain = false;
        break;
      case Op::VarZ:
        v = z;
        if (want_grad) g(i)[2 * n] = 1.0;
        chain = false;
        break;
      case Op::Neg: v = -av; da = -1.0; break;
      case Op::Add: v = av + bv; da = 1.0; db = 1.0; break;
      case Op::Sub: v = av - bv; da = 1.0; db = -1.0; break;
      case Op::Mul: v = av * bv; da = bv; db = av; break;
      case Op::Div:
        if (bv == 0.0) domain_error("division by zero", in);
        v = av / bv;
        da = 1.0 / bv;
        db = -v / bv;
        break;
      case Op::Pow: {
        if (av <= 0.0) domain_error("power with non-positive base", in);
        v = std::pow(av, bv);
        da = v * bv / av;
        db = v * std::log(av);
        break;
      }
      case Op::PowInt: {
        const long long e = static_cast<long long>(in.c0);
        if (e < 0 && av == 0.0) domain_error("zero raised to a negative power", in);
        const long long k = e < 0 ? -e : e;
        double base = e < 0 ? 1.0 / av : av;
        double acc = 1.0;
        double acc_prev = 0.0;  // base^{k-1}, for the derivative
        for (long long j = 0; j < k; ++j) {
          acc_prev = (j == k - 1) ? acc : acc_prev;
          acc *= base;
        }
        if (k == 0) {
          v = 1.0;
          da = 0.0;
        } else {
          v = acc;
          // d(base^k)/d(av): for e >= 0, e*av^{e-1}; for e < 0, e*av^{e-1} too.
          if (e >= 0) {
            da = static_cast<double>(e) * acc_prev;
          } else {
            da = static_cast<double>(e) * v / av;
          }
        }
        break;
      }
      case Op::Sin: v = std::sin(av); da = std::cos(av); break;
      case Op::Cos: v = std::cos(av); da = -std::sin(av); break;
      case Op::Exp: v = std::exp(av); da = v; break;
      case Op::Log:
        if (av <= 0.0) domain_error("log of a non-positive value", in);
        v = std::log(av);
        da = 1.0 / av;
        break;
      case Op::Tanh: {
        v = std::tanh(av);
        da = 1.0 - v * v;
        break;
      }
      case Op::Sqrt:
        if (av < 0.0) domain_error("sqrt of a negative value", in);
        v = std::sqrt(av);
        da = v > 0.0 ? 0.5 / v : std::numeric_limits<double>::infinity();
        break;
      case Op::Sabs: {
        v = std::sqrt(av * av + kSabsEps2);
        da = av / v;
        break;
      }
      case Op::Cutoff: {
        double r2 = z * z;
        for (int j = 0; j < n; ++j) r2 += q[j] * q[j] + p[j] * p[j];
        const double r = std::sqrt(r2);
        const double R0 = in.c0, w = in.c1;
        if (r <= R0) {
          v = av;
          if (want_grad) std::memcpy(g(i), ag, sizeof(double) * lanes);
        } else if (r >= R0 + w) {
          v = 0.0;  // grad slots are already zero
        } else {
          const Bump bb = bump(r, R0, w);
          v = av * bb.chi;
          if (want_grad) {
            double* gi = g(i);
            const double s = av * bb.dchi_dr / r;
            for (int j = 0; j < n; ++j) {
              gi[j] = ag[j] * bb.chi + s * q[j];
              gi[n + j] = ag[n + j] * bb.chi + s * p[j];
            }
            gi[2 * n] = ag[2 * n] * bb.chi + s * z;
          }
        }
        chain = false;
        break;
      }
    }

    val[i] = v;
    if (chain) {
      double* gi = g(i);
      if (ag && bg) {
        for (int l = 0; l < lanes; ++l) gi[l] = da * ag[l] + db * bg[l];
      } else if (ag) {
        for (int l = 0; l < lanes; ++l) gi[l] = da * ag[l];
      }
    }
  }

  if (want_grad) std::memcpy(grad_out, g(m - 1), sizeof(double) * lanes);
  return val[m - 1];
}

namespace {

// ---------------------------------------------------------------------------
// Parser: recursive descent emitting the tape directly in post-order.

class Parser {
 public:
  Parser(const std::string& src, int dim) : src_(src), dim_(dim) {}

  Program run() {
    Program prog;
    prog.dim = dim_;
    code_ = &prog.code;
    const std::int32_t root = parse_expr();
    (void)root;
    skip_ws();
    if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
    if (prog.code.empty()) throw ParseError("empty expression", 0);
    return prog;
  }

 private:
  std::int32_t emit(Instr in) {
    code_->push_back(in);
    return static_cast<std::int32_t>(code_->size() - 1);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!consume(c)) throw ParseError(std::string("expected '") + c + "' " + what, pos_);
  }

  std::int32_t parse_expr() {
    std::int32_t lhs = parse_term();
    while (true) {
      skip_ws();
      const std::uint32_t at = static_cast<std::uint32_t>(pos_);
      if (consume('+')) {
        const std::int32_t rhs = parse_term();
        lhs = emit({Op::Add, lhs, rhs, 0, 0, 0, at});
      } else if (consume('-')) {
        const std::int32_t rhs = parse_term();
        lhs = emit({Op::Sub, lhs, rhs, 0, 0, 0, at});
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_term() {
    std::int32_t lhs = parse_unary();
    while (true) {
      skip_ws();
      const std::uint32_t at = static_cast<std::uint32_t>(pos_);
      if (consume('*')) {
        const std::int32_t rhs = parse_unary();
        lhs = emit({Op::Mul, lhs, rhs, 0, 0, 0, at});
      } else if (consume('/')) {
        const std::int32_t rhs = parse_unary();
        lhs = emit({Op::Div, lhs, rhs, 0, 0, 0, at});
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_unary() {
    skip_ws();
    const std::uint32_t at = static_cast<std::uint32_t>(pos_);
    if (consume('-')) {
      const std::int32_t inner = parse_unary();
      return emit({Op::Neg, inner, -1, 0, 0, 0, at});
    }
    if (consume('+')) return parse_unary();
    return parse_power();
  }

  std::int32_t parse_power() {
    std::int32_t base = parse_atom();
    skip_ws();
    const std::uint32_t at = static_cast<std::uint32_t>(pos_);
    if (!consume('^')) return base;
    const std::int32_t expo = parse_unary();  // right-associative, unary binds
    // Fold integer constant exponents so negative bases stay legal.
    const Instr& einstr = (*code_)[expo];
    double cexp = 0.0;
    bool const_exp = false;
    if (einstr.op == Op::Const) {
      cexp = einstr.c0;
      const_exp = true;
    } else if (einstr.op == Op::Neg && (*code_)[einstr.a].op == Op::Const &&
               static_cast<std::size_t>(einstr.a) + 1 == static_cast<std::size_t>(expo)) {
      cexp = -(*code_)[einstr.a].c0;
      const_exp = true;
    }
    if (const_exp && cexp == std::floor(cexp) && std::abs(cexp) <= 64.0) {
      // Drop the exponent instructions (they are the tape tail) and emit PowInt.
      code_->resize(static_cast<std::size_t>(base) + 1);
      return emit({Op::PowInt, base, -1, cexp, 0, 0, at});
    }
    return emit({Op::Pow, base, expo, 0, 0, 0, at});
  }

  std::int32_t parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    const std::uint32_t at = static_cast<std::uint32_t>(pos_);
    if (c == '(') {
      ++pos_;
      const std::int32_t inner = parse_expr();
      expect(')', "to close parenthesis");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return emit({Op::Const, -1, -1, parse_number(), 0, 0, at});
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return parse_identifier();
    }
    throw ParseError("unexpected character", pos_);
  }

  double parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && src_[start] == '.'))
      throw ParseError("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t epos = pos_ + 1;
      if (epos < src_.size() && (src_[epos] == '+' || src_[epos] == '-')) ++epos;
      std::size_t dstart = epos;
      while (epos < src_.size() && std::isdigit(static_cast<unsigned char>(src_[epos]))) ++epos;
      if (epos == dstart) throw ParseError("malformed exponent", pos_);
      pos_ = epos;
    }
    double out = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, out);
    if (res.ec != std::errc{}) throw ParseError("malformed number", start);
    return out;
  }

  std::int32_t parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                  src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    const std::uint32_t at = static_cast<std::uint32_t>(start);

    if (name == "t") return emit({Op::VarT, -1, -1, 0, 0, 0, at});
    if (name == "z") return emit({Op::VarZ, -1, -1, 0, 0, 0, at});
    if (name == "pi") return emit({Op::Const, -1, -1, std::numbers::pi, 0, 0, at});

    if ((name[0] == 'q' || name[0] == 'p') && name.size() > 1 &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int idx = 0;
      std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (idx < 1 || idx > dim_)
        throw ParseError("coordinate index out of range for dimension " + std::to_string(dim_),
                         start);
      return emit({name[0] == 'q' ? Op::VarQ : Op::VarP, -1, -1, 0, 0, idx - 1, at});
    }

    static const std::pair<const char*, Op> kFns[] = {
        {"sin", Op::Sin},   {"cos", Op::Cos},  {"exp", Op::Exp},  {"log", Op::Log},
        {"tanh", Op::Tanh}, {"sqrt", Op::Sqrt}, {"sabs", Op::Sabs},
    };
    for (const auto& [fname, op] : kFns) {
      if (name == fname) {
        expect('(', "after function name");
        const std::int32_t arg = parse_expr();
        expect(')', "to close function call");
        return emit({op, arg, -1, 0, 0, 0, at});
      }
    }
    if (name == "cutoff") {
      expect('(', "after function name");
      const std::int32_t arg = parse_expr();
      expect(',', "between cutoff arguments");
      const double R0 = parse_constant_argument("cutoff radius");
      expect(',', "between cutoff arguments");
      const double w = parse_constant_argument("cutoff width");
      expect(')', "to close function call");
      if (!(R0 > 0.0) || !(w > 0.0))
        throw ParseError("cutoff radius and width must be positive", at);
      return emit({Op::Cutoff, arg, -1, R0, w, 0, at});
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  // cutoff parameters: a numeric literal with optional sign.
  double parse_constant_argument(const char* what) {
    skip_ws();
    double sign = 1.0;
    while (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
      if (src_[pos_] == '-') sign = -sign;
      ++pos_;
      skip_ws();
    }
    if (pos_ >= src_.size() || !(std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                 src_[pos_] == '.'))
      throw ParseError(std::string("expected a numeric literal for the ") + what, pos_);
    return sign * parse_number();
  }

  const std::string& src_;
  int dim_;
  std::size_t pos_ = 0;
  std::vector<Instr>* code_ = nullptr;
};

// ---------------------------------------------------------------------------
// Printer: fully parenthesised, so the canonical form reparses to the same tape.

std::string print_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string print_node(const Program& prog, std::int32_t i) {
  const Instr& in = prog.code[i];
  switch (in.op) {
    case Op::Const: {
      if (in.c0 < 0.0) return "(-" + print_double(-in.c0) + ")";
      return print_double(in.c0);
    }
    case Op::VarT: return "t";
    case Op::VarZ: return "z";
    case Op::VarQ: return "q" + std::to_string(in.var + 1);
    case Op::VarP: return "p" + std::to_string(in.var + 1);
    case Op::Neg: return "(-" + print_node(prog, in.a) + ")";
    case Op::Add: return "(" + print_node(prog, in.a) + " + " + print_node(prog, in.b) + ")";
    case Op::Sub: return "(" + print_node(prog, in.a) + " - " + print_node(prog, in.b) + ")";
    case Op::Mul: return "(" + print_node(prog, in.a) + " * " + print_node(prog, in.b) + ")";
    case Op::Div: return "(" + print_node(prog, in.a) + " / " + print_node(prog, in.b) + ")";
    case Op::Pow: return "(" + print_node(prog, in.a) + " ^ " + print_node(prog, in.b) + ")";
    case Op::PowInt: {
      const long long e = static_cast<long long>(in.c0);
      if (e < 0) return "(" + print_node(prog, in.a) + " ^ (-" + std::to_string(-e) + "))";
      return "(" + print_node(prog, in.a) + " ^ " + std::to_string(e) + ")";
    }
    case Op::Sin: return "sin(" + print_node(prog, in.a) + ")";
    case Op::Cos: return "cos(" + print_node(prog, in.a) + ")";
    case Op::Exp: return "exp(" + print_node(prog, in.a) + ")";
    case Op::Log: return "log(" + print_node(prog, in.a) + ")";
    case Op::Tanh: return "tanh(" + print_node(prog, in.a) + ")";
    case Op::Sqrt: return "sqrt(" + print_node(prog, in.a) + ")";
    case Op::Sabs: return "sabs(" + print_node(prog, in.a) + ")";
    case Op::Cutoff:
      return "cutoff(" + print_node(prog, in.a) + ", " + print_double(in.c0) + ", " +
             print_double(in.c1) + ")";
  }
  throw Error("print_node: corrupt tape");
}

}  // namespace
}  // namespace detail

double HamiltonianExpr::eval(double t, const ContactPoint& y) const {
  if (!prog_) throw Error("HamiltonianExpr: evaluating an empty expression");
  require_dim(y, dim_, "HamiltonianExpr::eval");
  return detail::eval_program(*prog_, t, y.q.data(), y.p.data(), y.z, nullptr);
}

JetValue HamiltonianExpr::eval_with_partials(double t, const ContactPoint& y) const {
  if (!prog_) throw Error("HamiltonianExpr: evaluating an empty expression");
  require_dim(y, dim_, "HamiltonianExpr::eval_with_partials");
  const int n = dim_;
  JetValue out;
  out.d_q.resize(n);
  out.d_p.resize(n);
  Vec grad(2 * n + 1);
  out.value = detail::eval_program(*prog_, t, y.q.data(), y.p.data(), y.z, grad.data());
  out.d_q = grad.head(n);
  out.d_p = grad.segment(n, n);
  out.d_z = grad(2 * n);
  return out;
}

double HamiltonianExpr::eval_jet_raw(double t, const double* q, const double* p, double z,
                                     double* grad) const {
  return detail::eval_program(*prog_, t, q, p, z, grad);
}

HamiltonianExpr parse_hamiltonian(const std::string& source, int dim) {
  if (dim < 1) throw ConfigError("dimension must be at least 1");
  detail::Parser parser(source, dim);
  HamiltonianExpr h;
  h.prog_ = std::make_shared<const detail::Program>(parser.run());
  h.dim_ = dim;
  h.source_ = source;
  // The support radius is known when the root is a cutoff node.
  const detail::Instr& root = h.prog_->code.back();
  if (root.op == detail::Op::Cutoff) h.support_radius_ = root.c0 + root.c1;
  return h;
}

std::string pretty_print(const HamiltonianExpr& h) {
  if (!h.prog_) throw Error("pretty_print: empty expression");
  return detail::print_node(*h.prog_, static_cast<std::int32_t>(h.prog_->code.size()) - 1);
}

HamiltonianExpr compactify(const HamiltonianExpr& h, double R0, double w) {
  if (!h.prog_) throw Error("compactify: empty expression");
  if (!(R0 > 0.0) || !(w > 0.0)) throw Error("compactify: R0 and w must be positive");
  detail::Program prog = *h.prog_;
  detail::Instr root;
  root.op = detail::Op::Cutoff;
  root.a = static_cast<std::int32_t>(prog.code.size()) - 1;
  root.c0 = R0;
  root.c1 = w;
  root.offset = 0;
  prog.code.push_back(root);
  HamiltonianExpr out;
  out.prog_ = std::make_shared<const detail::Program>(std::move(prog));
  out.dim_ = h.dim_;
  out.support_radius_ = R0 + w;
  out.source_ = pretty_print(out);
  return out;
}

}  // namespace jetgf
