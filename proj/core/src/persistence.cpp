#include "quditqec/persistence.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace quditqec {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string header(const std::string& kind) { return "# quditqec " + kind + " v" + std::to_string(kFormatVersion) + "\n"; }

// Line-oriented reader that skips blank lines and checks the header.
class Reader {
 public:
  Reader(const std::string& text, const std::string& kind) : in_(text) {
    std::string line;
    if (!std::getline(in_, line) || line != header(kind).substr(0, header(kind).size() - 1)) {
      throw ValidationError("expected a '" + kind + "' v" + std::to_string(kFormatVersion) + " file");
    }
  }

  bool next(std::istringstream& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      if (line.empty()) continue;
      fields.clear();
      fields.str(line);
      return true;
    }
    return false;
  }

  std::istringstream expect(const std::string& key) {
    std::istringstream fields;
    if (!next(fields)) throw ValidationError("unexpected end of file, expected '" + key + "'");
    std::string got;
    fields >> got;
    if (got != key) throw ValidationError("expected '" + key + "', found '" + got + "'");
    return fields;
  }

 private:
  std::istringstream in_;
};

double read_real(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ValidationError("missing numeric field");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ValidationError("malformed number '" + tok + "'");
  return v;
}

long read_int(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ValidationError("missing integer field");
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(tok, &used);
  } catch (const std::exception&) {
    throw ValidationError("malformed integer '" + tok + "'");
  }
  if (used != tok.size()) throw ValidationError("malformed integer '" + tok + "'");
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ValidationError("missing integer field");
  try {
    std::size_t used = 0;
    const auto v = std::stoull(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("malformed integer '" + tok + "'");
}

std::string read_word(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ValidationError("missing field");
  return tok;
}

void append_complex(std::string& out, Complex z) {
  out += format_real(z.real());
  out += ' ';
  out += format_real(z.imag());
}

}  // namespace

std::string geometry_to_text(const BathGeometry& g) {
  std::string out = header("bath-geometry");
  out += "seed " + std::to_string(g.seed) + "\n";
  out += "radius " + format_real(g.radius) + "\n";
  out += "min_distance " + format_real(g.min_distance) + "\n";
  out += "spins " + std::to_string(g.size()) + "\n";
  for (const auto& p : g.positions) out += format_real(p[0]) + " " + format_real(p[1]) + " " + format_real(p[2]) + "\n";
  return out;
}

BathGeometry geometry_from_text(const std::string& text) {
  Reader r(text, "bath-geometry");
  BathGeometry g;
  auto f = r.expect("seed");
  g.seed = read_u64(f);
  f = r.expect("radius");
  g.radius = read_real(f);
  f = r.expect("min_distance");
  g.min_distance = read_real(f);
  f = r.expect("spins");
  const long n = read_int(f);
  if (n < 0) throw ValidationError("negative spin count");
  for (long i = 0; i < n; ++i) {
    std::istringstream row;
    if (!r.next(row)) throw ValidationError("truncated bath geometry");
    Vec3 p;
    p[0] = read_real(row);
    p[1] = read_real(row);
    p[2] = read_real(row);
    g.positions.push_back(p);
  }
  g.validate();
  return g;
}

std::string decoherence_to_text(const DecoherenceMatrix& L, const std::string& schedule) {
  const int d = L.dim();
  std::string out = header("decoherence");
  out += "two_s " + std::to_string(L.s.two_s()) + "\n";
  out += "schedule " + schedule + "\n";
  out += "times " + std::to_string(L.times.size()) + "\n";
  // One row per time: t, then Re/Im of L_nm for n < m in row-major order.
  for (std::size_t i = 0; i < L.times.size(); ++i) {
    out += format_real(L.times[i]);
    for (int n = 0; n < d; ++n) {
      for (int m = n + 1; m < d; ++m) {
        out += ' ';
        append_complex(out, L.values[i](n, m));
      }
    }
    out += '\n';
  }
  return out;
}

DecoherenceMatrix decoherence_from_text(const std::string& text, std::string* schedule) {
  Reader r(text, "decoherence");
  auto f = r.expect("two_s");
  DecoherenceMatrix L;
  L.s = SpinQuantum(static_cast<int>(read_int(f)));
  f = r.expect("schedule");
  const std::string name = read_word(f);
  if (schedule) *schedule = name;
  f = r.expect("times");
  const long n_times = read_int(f);
  if (n_times < 0) throw ValidationError("negative time count");
  const int d = L.dim();
  for (long i = 0; i < n_times; ++i) {
    std::istringstream row;
    if (!r.next(row)) throw ValidationError("truncated decoherence table");
    L.times.push_back(read_real(row));
    CMatrix v = CMatrix::Identity(d, d);
    for (int n = 0; n < d; ++n) {
      for (int m = n + 1; m < d; ++m) {
        const double re = read_real(row);
        const double im = read_real(row);
        v(n, m) = Complex(re, im);
        v(m, n) = std::conj(v(n, m));
      }
    }
    L.values.push_back(std::move(v));
  }
  L.validate();
  return L;
}

std::string code_plan_to_text(const CodePlan& plan) {
  const int d = plan.words.s.dim();
  std::string out = header("code-plan");
  out += "kind " + plan.kind + "\n";
  out += "two_s " + std::to_string(plan.words.s.two_s()) + "\n";
  out += "t_opt " + format_real(plan.t_opt) + "\n";
  out += "K " + std::to_string(plan.errors.size()) + "\n";
  out += "kl_residual " + format_real(plan.words.kl_residual) + "\n";
  out += "flagged " + std::to_string(plan.words.flagged ? 1 : 0) + "\n";
  out += "fit_converged " + std::to_string(plan.errors.converged ? 1 : 0) + "\n";
  out += "residual_norms";
  for (double r : plan.errors.residual_norms) out += " " + format_real(r);
  out += "\n";
  for (int c = 0; c < 2; ++c) {
    const CVector& w = c == 0 ? plan.words.zero_l : plan.words.one_l;
    for (int l = 0; l < d; ++l) {
      out += (c == 0 ? "zero_l " : "one_l ") + std::to_string(l) + " ";
      append_complex(out, w(l));
      out += "\n";
    }
  }
  for (int k = 0; k < plan.errors.size(); ++k) {
    for (int l = 0; l < d; ++l) {
      out += "error " + std::to_string(k) + " " + std::to_string(l) + " ";
      append_complex(out, plan.errors.operators[static_cast<std::size_t>(k)](l));
      out += "\n";
    }
  }
  return out;
}

CodePlan code_plan_from_text(const std::string& text) {
  Reader r(text, "code-plan");
  CodePlan plan;
  auto f = r.expect("kind");
  plan.kind = read_word(f);
  f = r.expect("two_s");
  const SpinQuantum s(static_cast<int>(read_int(f)));
  const int d = s.dim();
  f = r.expect("t_opt");
  plan.t_opt = read_real(f);
  plan.errors.optimization_time = plan.t_opt;
  f = r.expect("K");
  const long K = read_int(f);
  if (K < 1 || K > d) throw ValidationError("code plan: K out of range");
  f = r.expect("kl_residual");
  plan.words.kl_residual = read_real(f);
  f = r.expect("flagged");
  plan.words.flagged = read_int(f) != 0;
  f = r.expect("fit_converged");
  plan.errors.converged = read_int(f) != 0;
  f = r.expect("residual_norms");
  for (long k = 0; k < K; ++k) plan.errors.residual_norms.push_back(read_real(f));

  plan.words.s = s;
  plan.words.zero_l = CVector::Zero(d);
  plan.words.one_l = CVector::Zero(d);
  plan.errors.operators.assign(static_cast<std::size_t>(K), CVector::Zero(d));
  for (long line = 0; line < 2 * d + K * d; ++line) {
    std::istringstream row;
    if (!r.next(row)) throw ValidationError("truncated code plan");
    const std::string key = read_word(row);
    if (key == "zero_l" || key == "one_l") {
      const long l = read_int(row);
      if (l < 0 || l >= d) throw ValidationError("code plan: level out of range");
      const double re = read_real(row);
      (key == "zero_l" ? plan.words.zero_l : plan.words.one_l)(l) = Complex(re, read_real(row));
    } else if (key == "error") {
      const long k = read_int(row);
      const long l = read_int(row);
      if (k < 0 || k >= K || l < 0 || l >= d) throw ValidationError("code plan: error index out of range");
      const double re = read_real(row);
      plan.errors.operators[static_cast<std::size_t>(k)](l) = Complex(re, read_real(row));
    } else {
      throw ValidationError("code plan: unexpected key '" + key + "'");
    }
  }
  plan.plan = build_detection_recovery(plan.errors.operators, plan.words);
  return plan;
}

std::string pulse_sequence_to_text(const PulseSequence& seq, double measurement_ns) {
  const int d = seq.s.dim();
  std::string out = header("pulse-sequence");
  out += "two_s " + std::to_string(seq.s.two_s()) + "\n";
  out += "stages " + std::to_string(seq.stages.size()) + "\n";
  for (const auto& st : seq.stages) {
    out += "stage " + st.label + " pulses " + std::to_string(st.pulses.size()) + " measurements " +
           std::to_string(st.measurements) + " residue " + std::to_string(st.phase_residue.size()) + " columns " +
           std::to_string(st.target.size() > 0 ? (st.columns.empty() ? d : static_cast<int>(st.columns.size())) : 0) +
           "\n";
    for (std::size_t i = 0; i < st.pulses.size(); ++i) {
      const Pulse& p = st.pulses[i];
      out += "pulse " + std::to_string(i) + " " + std::to_string(p.level) + " " + format_real(seq.s.m_of(p.level)) +
             " " + format_real(p.theta) + " " + format_real(p.phi) + " " + format_real(p.duration_ns) + "\n";
    }
    for (Eigen::Index l = 0; l < st.phase_residue.size(); ++l) {
      out += "residue " + std::to_string(l) + " ";
      append_complex(out, st.phase_residue(l));
      out += "\n";
    }
    if (st.target.size() > 0) {
      std::vector<int> cols = st.columns;
      if (cols.empty()) {
        for (int c = 0; c < d; ++c) cols.push_back(c);
      }
      for (int c : cols) {
        out += "target " + std::to_string(c);
        for (int row = 0; row < d; ++row) {
          out += ' ';
          append_complex(out, st.target(row, c));
        }
        out += "\n";
      }
    }
  }
  const VerificationReport rep = verify_sequence(seq);
  out += "summary pulses " + std::to_string(seq.pulse_count()) + " measurements " +
         std::to_string(seq.measurement_count()) + " duration_ns " + format_real(seq.total_duration_ns(measurement_ns)) +
         " verification_error " + format_real(rep.max_error) + "\n";
  return out;
}

PulseSequence pulse_sequence_from_text(const std::string& text) {
  Reader r(text, "pulse-sequence");
  PulseSequence seq;
  auto f = r.expect("two_s");
  seq.s = SpinQuantum(static_cast<int>(read_int(f)));
  const int d = seq.s.dim();
  f = r.expect("stages");
  const long n_stages = read_int(f);
  if (n_stages < 0) throw ValidationError("negative stage count");
  for (long si = 0; si < n_stages; ++si) {
    auto row = r.expect("stage");
    SequenceStage st;
    st.label = read_word(row);
    std::map<std::string, long> counts;
    for (int i = 0; i < 4; ++i) {
      const std::string key = read_word(row);
      counts[key] = read_int(row);
    }
    for (const char* key : {"pulses", "measurements", "residue", "columns"}) {
      if (!counts.count(key) || counts[key] < 0) throw ValidationError(std::string("stage: missing ") + key);
    }
    st.measurements = static_cast<int>(counts["measurements"]);
    for (long i = 0; i < counts["pulses"]; ++i) {
      auto p = r.expect("pulse");
      read_int(p);
      Pulse pulse;
      pulse.level = static_cast<int>(read_int(p));
      read_real(p);
      pulse.theta = read_real(p);
      pulse.phi = read_real(p);
      pulse.duration_ns = read_real(p);
      if (pulse.level < 0 || pulse.level + 1 >= d) throw ValidationError("pulse: level out of range");
      st.pulses.push_back(pulse);
    }
    if (counts["residue"] > 0) {
      if (counts["residue"] != d) throw ValidationError("stage: residue length mismatch");
      st.phase_residue = CVector::Ones(d);
      for (long i = 0; i < d; ++i) {
        auto p = r.expect("residue");
        const long l = read_int(p);
        if (l < 0 || l >= d) throw ValidationError("residue: level out of range");
        const double re = read_real(p);
        st.phase_residue(l) = Complex(re, read_real(p));
      }
    }
    if (counts["columns"] > 0) {
      st.target = CMatrix::Zero(d, d);
      for (long i = 0; i < counts["columns"]; ++i) {
        auto p = r.expect("target");
        const long c = read_int(p);
        if (c < 0 || c >= d) throw ValidationError("target: column out of range");
        for (int row_i = 0; row_i < d; ++row_i) {
          const double re = read_real(p);
          st.target(row_i, c) = Complex(re, read_real(p));
        }
        st.columns.push_back(static_cast<int>(c));
      }
      if (static_cast<int>(st.columns.size()) == d) st.columns.clear();
    }
    seq.stages.push_back(std::move(st));
  }
  r.expect("summary");
  return seq;
}

std::string table_to_text(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
  std::string out = "#";
  for (const auto& c : columns) out += " " + c;
  out += "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw ValidationError("table_to_text: row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ' ';
      out += format_real(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::vector<double>> table_from_text(const std::string& text, std::vector<std::string>* columns) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#", 0) != 0) throw ValidationError("table: missing header");
  std::istringstream head(line.substr(1));
  std::vector<std::string> names;
  for (std::string w; head >> w;) names.push_back(w);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<double> row;
    for (std::size_t i = 0; i < names.size(); ++i) row.push_back(read_real(fields));
    std::string extra;
    if (fields >> extra) throw ValidationError("table: row wider than header");
    rows.push_back(std::move(row));
  }
  if (columns) *columns = names;
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << contents;
    if (!out) throw ValidationError("write failed for '" + path + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace quditqec
