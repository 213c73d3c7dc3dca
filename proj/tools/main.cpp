// Command line front end: transform, spectrum, design, verify, simulate.
//
// Exit codes
//   0  success (for design/verify: the certificate holds)
//   1  cannot read or parse the descriptor / bad command line
//   2  system is not controllable, no CC transform exists
//   3  auxiliary matrix too ill-conditioned for gain recovery
//   4  result produced but the rightmost-root certificate is refuted
//   5  numeric failure (divergence, domain violations, no convergence)

#include <algorithm>
#include <cctype>
#include <complex>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <tdlw/tdlw.hpp>

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 1;
constexpr int kUncontrollable = 2;
constexpr int kSingular = 3;
constexpr int kRefuted = 4;
constexpr int kNumeric = 5;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(tdlw::cplx v) {
  if (v.imag() == 0.0) return num(v.real());
  return num(v.real()) + (v.imag() < 0 ? " - " : " + ") +
         num(std::abs(v.imag())) + "i";
}

std::string row_text(const tdlw::Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out += (i ? ", " : "") + num(v(i));
  return out + "]";
}

void print_matrix(const std::string& label, const tdlw::Mat& m) {
  std::cout << label << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    std::cout << "  " << row_text(m.row(i).transpose()) << "\n";
}

double to_double(const std::string& s) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw tdlw::ParseError("not a number: `" + s + "`");
  }
  if (used != s.size())
    throw tdlw::ParseError("trailing characters in number: `" + s + "`");
  return v;
}

// Accepts 1.5, -2, 3i, -1+2i, 0.27-1.56i, 1e-3+2e2i.
tdlw::cplx parse_complex(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(),
                         [](unsigned char c) { return std::isspace(c); }),
          s.end());
  if (s.empty()) throw tdlw::ParseError("empty complex literal");
  if (s.back() != 'i' && s.back() != 'I') return {to_double(s), 0.0};

  const std::string t = s.substr(0, s.size() - 1);
  if (t.empty() || t == "+") return {0.0, 1.0};
  if (t == "-") return {0.0, -1.0};

  size_t split = std::string::npos;
  for (size_t i = t.size() - 1; i >= 1; --i) {
    const char c = t[i];
    if ((c == '+' || c == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string::npos) return {0.0, to_double(t)};

  const double re = to_double(t.substr(0, split));
  std::string im = t.substr(split);
  if (im == "+") return {re, 1.0};
  if (im == "-") return {re, -1.0};
  return {re, to_double(im)};
}

std::vector<tdlw::cplx> parse_complex_list(const std::string& s) {
  std::vector<tdlw::cplx> out;
  size_t from = 0;
  while (from <= s.size()) {
    const size_t comma = s.find(',', from);
    const std::string tok =
        s.substr(from, comma == std::string::npos ? comma : comma - from);
    out.push_back(parse_complex(tok));
    if (comma == std::string::npos) break;
    from = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  size_t from = 0;
  while (from <= s.size()) {
    const size_t comma = s.find(',', from);
    const std::string tok =
        s.substr(from, comma == std::string::npos ? comma : comma - from);
    out.push_back(to_double(tok));
    if (comma == std::string::npos) break;
    from = comma + 1;
  }
  return out;
}

std::string default_prefix(const tdlw::Descriptor& d, const char* fallback) {
  if (d.name.empty()) return fallback;
  std::string out = d.name;
  for (char& c : out)
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  return out;
}

tdlw::RankOneDelaySystem rank_one_system(const tdlw::Descriptor& d,
                                         const tdlw::TimeDelaySystem& sys) {
  if (d.b && d.c) return tdlw::RankOneDelaySystem(*d.A, *d.b, *d.c, d.h);
  return tdlw::rank_one_from(sys);  // throws unless A_d has rank one
}

tdlw::CharFunction best_char_function(const tdlw::TimeDelaySystem& sys) {
  if (const auto cc = tdlw::is_cc_form(sys)) return tdlw::char_function(*cc);
  return tdlw::char_function(sys);
}

void report_certificate(const tdlw::CertificationResult& cert,
                        const tdlw::cplx& lambda, double mu) {
  std::cout << "certificate for rightmost root " << num(lambda)
            << " (margin " << num(mu) << "):\n"
            << "  boundary sweep: closest approach "
            << num(cert.boundary.min_distance) << " at omega "
            << num(cert.boundary.min_omega) << " (threshold "
            << num(cert.boundary_tol) << ")\n"
            << "  interior sweep: winding " << cert.interior.winding
            << ", closest approach " << num(cert.interior.min_distance)
            << "\n";
  if (cert.certified)
    std::cout << "  certified: no root lies to the right\n";
  else
    std::cout << "  REFUTED: " << cert.reason << "\n";
}

void write_certificate_outputs(const std::string& prefix,
                               const tdlw::CertificationResult& cert) {
  tdlw::write_curve_csv(prefix + "_cond1.csv", cert.boundary);
  tdlw::write_curve_csv(prefix + "_cond2.csv", cert.interior);
  tdlw::write_nyquist_svg(
      prefix + "_nyquist.svg",
      {{&cert.boundary, "boundary"}, {&cert.interior, "interior"}});
  std::cout << "wrote " << prefix << "_cond1.csv, " << prefix
            << "_cond2.csv, " << prefix << "_nyquist.svg\n";
}

// ---------------------------------------------------------------- transform

int cmd_transform(const std::string& file) {
  const tdlw::Descriptor d = tdlw::load_descriptor(file);
  const tdlw::TimeDelaySystem sys = tdlw::descriptor_system(d);
  std::cout << "system `" << d.name << "`: order " << d.order << ", delay h = "
            << num(d.h) << "\n";

  if (const auto cc = tdlw::is_cc_form(sys)) {
    std::cout << "already in CC form\n"
              << "  last row of A:   " << row_text(cc->a) << "\n"
              << "  last row of A_d: " << row_text(cc->ad) << "\n";
    return kOk;
  }

  const tdlw::RankOneDelaySystem r1 = rank_one_system(d, sys);
  const auto [trans, cc] = tdlw::to_cc_form(r1);
  print_matrix("T (x = T z):", trans.T);
  print_matrix("T^-1:", trans.T_inv);
  std::cout << "transformed CC system:\n"
            << "  last row of A:   " << row_text(cc.a) << "\n"
            << "  last row of A_d: " << row_text(cc.ad) << "\n";

  const double residual =
      (trans.T_inv * sys.A * trans.T - cc.A()).cwiseAbs().maxCoeff() +
      (trans.T_inv * sys.Ad * trans.T - cc.Ad()).cwiseAbs().maxCoeff();
  std::cout << "round-trip residual: " << num(residual) << "\n";
  return kOk;
}

// ----------------------------------------------------------------- spectrum

int cmd_spectrum(const std::string& file, const std::vector<double>& region3,
                 double grid_step, const std::string& roots_arg,
                 std::string prefix) {
  const tdlw::Descriptor d = tdlw::load_descriptor(file);
  const tdlw::TimeDelaySystem sys = tdlw::descriptor_system(d);
  const tdlw::SearchRegion region{region3[0], region3[1], 0.0, region3[2]};
  if (prefix.empty()) prefix = default_prefix(d, "spectrum");

  tdlw::ScanOptions opts;
  if (grid_step > 0.0) opts.rootfinder.grid_step = grid_step;

  std::optional<tdlw::CCFormSystem> cc = tdlw::is_cc_form(sys);
  if (!cc) {
    try {
      cc = tdlw::to_cc_form(rank_one_system(d, sys)).second;
      std::cout << "transformed to CC form for branch attribution\n";
    } catch (const tdlw::Error&) {
      std::cout << "no CC transform available; roots are reported without "
                   "branch attribution\n";
    }
  }

  // An explicit root list skips the scan: attribute the given set directly.
  if (!roots_arg.empty()) {
    if (!cc)
      throw tdlw::DimensionError(
          "explicit root attribution needs a CC form system");
    const std::vector<tdlw::cplx> given = parse_complex_list(roots_arg);
    const tdlw::Mat s = tdlw::companion_from_roots(given);
    const tdlw::BranchAttribution att = tdlw::attribute_branch(*cc, s);
    const tdlw::CharFunction p = tdlw::char_function(*cc);
    std::cout << "given set -> branch k = " << att.branch << "\n"
              << "  w row " << row_text(att.w_row) << "\n"
              << "  M last row " << row_text(att.m.last_row) << "\n";
    for (const auto& root : given)
      std::cout << "  " << num(root) << "   residual "
                << num(std::abs(p.eval(root)) / p.scale(root)) << "\n";
    return kOk;
  }

  tdlw::ScanResult scan;
  if (cc) {
    scan = tdlw::spectrum_scan(*cc, region, opts);
  } else {
    scan.located =
        tdlw::find_roots(tdlw::char_function(sys), region, opts.rootfinder);
  }

  std::cout << scan.located.size() << " root(s) in [" << num(region.re_min)
            << ", " << num(region.re_max) << "] x [0, " << num(region.im_max)
            << "]i (conjugates implied):\n";
  for (const auto& r : scan.located)
    std::cout << "  " << num(r.value) << "   residual " << num(r.residual)
              << (r.multiplicity > 1
                      ? "   multiplicity " + std::to_string(r.multiplicity)
                      : "")
              << "\n";

  for (size_t i = 0; i < scan.sets.size(); ++i) {
    const auto& set = scan.sets[i];
    std::cout << "set " << (i + 1) << " -> branch k = " << set.branch << ":";
    for (const auto& root : set.roots) std::cout << " " << num(root) << ";";
    std::cout << "\n  w row " << row_text(set.w_row) << "\n";
  }
  for (const auto& root : scan.ungrouped)
    std::cout << "ungrouped root " << num(root)
              << " (no order-sized conjugate-closed window)\n";

  tdlw::write_roots_csv(prefix + "_roots.csv", scan.located);
  tdlw::write_spectrum_svg(prefix + "_spectrum.svg", scan.located, region);
  std::cout << "wrote " << prefix << "_roots.csv, " << prefix
            << "_spectrum.svg\n";
  return kOk;
}

// ------------------------------------------------------------------- design

int cmd_design(const std::string& file, const std::string& roots_arg,
               double mu, double tol, std::string prefix) {
  const tdlw::Descriptor d = tdlw::load_descriptor(file);
  const tdlw::TimeDelaySystem sys = tdlw::descriptor_system(d);
  const std::vector<tdlw::cplx> desired = parse_complex_list(roots_arg);
  if (prefix.empty()) prefix = default_prefix(d, "design");

  tdlw::DesignOptions opts;
  if (tol > 0.0) opts.residual_tol = tol;

  tdlw::DesignResult res = [&] {
    if (sys.Ad.isZero(0.0)) {
      if (!d.B)
        throw tdlw::DimensionError(
            "design on a delay-free plant needs the input column B");
      return tdlw::assign_eigenvalues(
          tdlw::InputDelayPlant(sys.A, *d.B, sys.h), desired, opts);
    }
    const auto cc = tdlw::is_cc_form(sys);
    if (!cc)
      throw tdlw::DimensionError(
          "design needs either A_d = 0 with an input column B, or a system "
          "already in CC form actuated through its last state");
    if (d.B) {
      tdlw::Vec unit = tdlw::Vec::Zero(sys.order());
      unit(sys.order() - 1) = 1.0;
      if ((*d.B - unit).cwiseAbs().maxCoeff() > 1e-12)
        throw tdlw::DimensionError(
            "CC-form design assumes actuation through the last state; B must "
            "be the last unit vector");
    }
    return tdlw::assign_eigenvalues(*cc, desired, opts);
  }();

  std::cout << "gain row K (u(t) = K x(t), delayed by h): "
            << row_text(res.gain) << "\n"
            << "branch k = " << res.triple.branch << ", Newton iterations "
            << res.triple.iterations << "\n"
            << "M last row " << row_text(res.triple.lambert_arg.last_row)
            << "\n";
  print_matrix("auxiliary P:", res.triple.auxiliary);
  std::cout << "nonlinear residual " << num(res.triple.residual_nonlinear)
            << "\n";
  for (size_t i = 0; i < res.assigned.size(); ++i)
    std::cout << "  assigned " << num(res.assigned[i])
              << "   characteristic residual " << num(res.residuals[i])
              << "\n";
  if (!res.verified) {
    std::cout << "assignment NOT verified against the design tolerance\n";
    return kNumeric;
  }

  const tdlw::cplx dominant = res.assigned.front();
  const tdlw::CertificationResult cert =
      tdlw::certify_rightmost(best_char_function(res.closed_loop), dominant,
                              mu);
  report_certificate(cert, dominant, mu);
  write_certificate_outputs(prefix, cert);
  return cert.certified ? kOk : kRefuted;
}

// ------------------------------------------------------------------- verify

int cmd_verify(const std::string& file, const std::string& lambda_arg,
               double mu, const std::vector<double>& region3,
               std::string prefix) {
  const tdlw::Descriptor d = tdlw::load_descriptor(file);
  const tdlw::TimeDelaySystem sys = tdlw::descriptor_system(d);
  const tdlw::cplx lambda = parse_complex(lambda_arg);
  if (prefix.empty()) prefix = default_prefix(d, "verify");

  const tdlw::CharFunction p = best_char_function(sys);
  const tdlw::CertificationResult cert = tdlw::certify_rightmost(p, lambda, mu);
  report_certificate(cert, lambda, mu);

  const tdlw::SearchRegion region{region3[0], region3[1], 0.0, region3[2]};
  const tdlw::StabilityResult st = tdlw::stability_verdict(p, region);
  std::cout << "stability: " << tdlw::to_string(st.verdict);
  if (st.verdict != tdlw::Verdict::indeterminate)
    std::cout << " (" << st.roots_right << " root(s) right of the axis)";
  std::cout << "\n";
  if (st.rightmost)
    std::cout << "rightmost root in the probe region: " << num(st.rightmost->value)
              << "\n";
  std::cout << (st.cross_checked
                    ? "root finder cross-check agrees\n"
                    : "root finder cross-check DISAGREES with the sweep\n");

  write_certificate_outputs(prefix, cert);

  const bool ok = cert.certified && st.verdict == tdlw::Verdict::stable &&
                  st.cross_checked;
  std::cout << (ok ? "verified: certified stable\n"
                   : "verification negative\n");
  return ok ? kOk : kRefuted;
}

// ----------------------------------------------------------------- simulate

int cmd_simulate(const std::string& file, double t_end, double dt,
                 const std::string& x0_arg, std::string prefix) {
  const tdlw::Descriptor d = tdlw::load_descriptor(file);
  const tdlw::TimeDelaySystem sys = tdlw::descriptor_system(d);
  if (prefix.empty()) prefix = default_prefix(d, "simulate");

  tdlw::Vec x0 = tdlw::Vec::Ones(sys.order());
  if (!x0_arg.empty()) {
    const std::vector<double> given = parse_double_list(x0_arg);
    if (static_cast<Eigen::Index>(given.size()) != sys.order())
      throw tdlw::DimensionError("x0 needs exactly " +
                                 std::to_string(sys.order()) + " entries");
    for (size_t i = 0; i < given.size(); ++i)
      x0(static_cast<Eigen::Index>(i)) = given[i];
  }

  const auto hist = tdlw::HistorySegment::constant(x0, sys.h);
  const tdlw::Trajectory traj = tdlw::integrate(sys, hist, t_end, dt);

  std::cout << traj.times.size() << " samples, step " << num(traj.dt) << "\n";
  if (traj.diverged)
    std::cout << "trajectory DIVERGED; output truncated at t = "
              << num(traj.times.back()) << "\n";
  else
    std::cout << "final state " << row_text(traj.states.back()) << " (norm "
              << num(traj.states.back().norm()) << ")\n";
  try {
    const double rate = tdlw::decay_rate(traj, t_end / 2.0, t_end);
    std::cout << "exponential rate over [" << num(t_end / 2.0) << ", "
              << num(t_end) << "]: " << num(rate) << "\n";
  } catch (const tdlw::Error&) {
    // window unusable (short run or vanishing state); skip the estimate
  }

  tdlw::write_trajectory_csv(prefix + "_trajectory.csv", traj);
  tdlw::write_trajectory_svg(prefix + "_trajectory.svg", traj);
  std::cout << "wrote " << prefix << "_trajectory.csv, " << prefix
            << "_trajectory.svg\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "eigenspectrum analysis and eigenvalue assignment for linear time "
      "delay systems x'(t) = A x(t) + A_d x(t-h)"};
  app.require_subcommand(1);

  std::string file, roots_arg, lambda_arg, x0_arg, prefix;
  std::vector<double> region3{-10.0, 2.0, 50.0};
  double grid_step = 0.0, mu = 0.1, t_end = 10.0, dt = 0.0, tol = 0.0;

  auto* transform =
      app.add_subcommand("transform", "change of coordinates into CC form");
  transform->add_option("file", file, "system descriptor")->required();

  auto* spectrum = app.add_subcommand(
      "spectrum", "locate characteristic roots and attribute branches");
  spectrum->add_option("file", file, "system descriptor")->required();
  spectrum
      ->add_option("--region", region3,
                   "search window: re_min re_max im_max (im_min = 0)")
      ->expected(3);
  spectrum->add_option("--grid-step", grid_step, "initial contour cell size");
  spectrum->add_option(
      "--roots", roots_arg,
      "skip the scan; attribute this comma separated root set directly");
  spectrum->add_option("--out", prefix, "output file prefix");

  auto* design = app.add_subcommand(
      "design", "state feedback placing the given eigenvalues");
  design->add_option("file", file, "system descriptor")->required();
  design
      ->add_option("--roots", roots_arg,
                   "comma separated desired eigenvalues, e.g. -1+2i,-1-2i")
      ->required();
  design->add_option("--mu", mu, "certification margin (default 0.1)");
  design->add_option("--tol", tol,
                     "assignment verification tolerance (default 1e-6)");
  design->add_option("--out", prefix, "output file prefix");

  auto* verify = app.add_subcommand(
      "verify", "certify a rightmost root and give a stability verdict");
  verify->add_option("file", file, "system descriptor")->required();
  verify->add_option("--lambda", lambda_arg, "candidate rightmost root")
      ->required();
  verify->add_option("--mu", mu, "certification margin (default 0.1)");
  verify
      ->add_option("--region", region3,
                   "cross-check window: re_min re_max im_max")
      ->expected(3);
  verify->add_option("--out", prefix, "output file prefix");

  auto* simulate =
      app.add_subcommand("simulate", "integrate by the method of steps");
  simulate->add_option("file", file, "system descriptor")->required();
  simulate->add_option("--t-end", t_end, "end time (default 10)");
  simulate->add_option("--dt", dt, "requested step, at most h/10")
      ->required();
  simulate->add_option("--x0", x0_arg,
                       "comma separated initial state (default all ones)");
  simulate->add_option("--out", prefix, "output file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*transform) return cmd_transform(file);
    if (*spectrum)
      return cmd_spectrum(file, region3, grid_step, roots_arg, prefix);
    if (*design) return cmd_design(file, roots_arg, mu, tol, prefix);
    if (*verify) return cmd_verify(file, lambda_arg, mu, region3, prefix);
    if (*simulate) return cmd_simulate(file, t_end, dt, x0_arg, prefix);
  } catch (const tdlw::ParseError& e) {
    std::cerr << "parse error";
    if (e.line > 0) std::cerr << " (line " << e.line << ")";
    std::cerr << ": " << e.what() << "\n";
    return kBadInput;
  } catch (const tdlw::UncontrollableError& e) {
    std::cerr << "uncontrollable: " << e.what() << " (rank " << e.rank
              << " of " << e.order << ")\n";
    return kUncontrollable;
  } catch (const tdlw::SingularMatrixError& e) {
    std::cerr << "ill-conditioned: " << e.what() << " (condition "
              << num(e.condition) << ")\n";
    return kSingular;
  } catch (const tdlw::Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kNumeric;
  }
  return kBadInput;
}
