#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "divlab/accumulation.hpp"
#include "divlab/adversary.hpp"
#include "divlab/channel_div.hpp"
#include "divlab/divergences.hpp"
#include "divlab/errors.hpp"
#include "divlab/io.hpp"

using namespace divlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitResource = 4;

struct Config {
  std::string channel_a, channel_b, state_a, state_b;
  std::string family = "umegaki";
  std::string chain_family = "measured";
  std::string model = "both";
  std::string figure;
  std::string out;
  std::string format = "csv";
  double alpha = 1.0;
  double eps = 0.1;
  double tol = 1e-6;
  double c = 16.0;
  std::size_t n = 1;
  std::size_t copies = 1;
  std::size_t trials = 500;
  std::size_t mem_cap = 4;
  std::uint64_t seed = 1;
  bool same_input = false;
};

// Owns the output stream and the table writer so that partial results can be
// completed with an error record when a command aborts.
class Sink {
 public:
  explicit Sink(const Config& cfg) : format_(cfg.format == "json" ? io::TableWriter::Format::json
                                                                  : io::TableWriter::Format::csv) {
    if (!cfg.out.empty()) {
      file_ = std::make_unique<std::ofstream>(cfg.out, std::ios::binary | std::ios::trunc);
      if (!*file_) throw ValidationError("--out: cannot open '" + cfg.out + "' for writing");
    }
  }

  io::TableWriter& table(const std::string& command, std::vector<std::string> columns) {
    writer_ = std::make_unique<io::TableWriter>(stream(), format_, command, std::move(columns));
    return *writer_;
  }

  void fail(const std::string& message) {
    if (writer_) {
      writer_->error(message);
      writer_->close();
    }
  }

  void finish() {
    if (writer_) writer_->close();
  }

 private:
  std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

  io::TableWriter::Format format_;
  std::unique_ptr<std::ofstream> file_;
  std::unique_ptr<io::TableWriter> writer_;
};

QuantumMap load_channel(const std::string& path, const char* flag) {
  if (path.empty()) throw ValidationError(std::string(flag) + ": a channel file is required");
  return io::parse_channel(io::load_json_file(path), flag);
}

Matrix load_state(const std::string& path, const char* flag) {
  if (path.empty()) throw ValidationError(std::string(flag) + ": a state file is required");
  return io::parse_state(io::load_json_file(path), flag);
}

SolverOptions solver_options(const Config& cfg) {
  SolverOptions o;
  o.tol = cfg.tol;
  o.seed = cfg.seed;
  return o;
}

DivergenceSpec spec_of(const Config& cfg) {
  DivergenceSpec s{parse_family(cfg.family), cfg.alpha, cfg.eps};
  if (s.family == Family::umegaki || s.family == Family::measured || s.family == Family::max) s.alpha = 1.0;
  if (s.family != Family::hypothesis) s.epsilon = 0.0;
  s.validate();
  return s;
}

int cmd_divergence(const Config& cfg, Sink& sink) {
  const Matrix rho = load_state(cfg.state_a, "--state-a");
  const Matrix sigma = load_state(cfg.state_b, "--state-b");
  const DivergenceSpec spec = spec_of(cfg);
  io::TableWriter& w = sink.table("divergence", {"family", "alpha", "epsilon", "value", "beta", "gap", "converged"});
  const CertifiedValue v = evaluate(spec, rho, sigma);
  w.row({std::string(family_name(spec.family)), spec.alpha, spec.epsilon, v.value,
         spec.family == Family::hypothesis ? io::Cell{v.beta} : io::Cell{std::string("")},
         v.gap_known ? io::Cell{v.gap} : io::Cell{std::string("")}, v.converged});
  return v.converged ? kExitOk : kExitSolver;
}

MinOutputResult solve_min_output(const QuantumMap& a, const QuantumMap& b, const DivergenceSpec& spec, std::size_t n,
                                 bool same_input, const SolverOptions& opt) {
  if (same_input) return min_output_same_input(a, b, spec, n, opt);
  switch (spec.family) {
    case Family::measured: return min_output_measured(a, b, 1.0, n, opt);
    case Family::measured_renyi: return min_output_measured(a, b, spec.alpha, n, opt);
    case Family::max: return dmax_min_output(a, b, n);
    case Family::sandwiched:
      if (spec.alpha == 0.5) return fidelity_min_output(a, b, n, opt);
      return min_output(a, b, spec, n, opt);
    default: return min_output(a, b, spec, n, opt);
  }
}

int cmd_min_output(const Config& cfg, Sink& sink) {
  const QuantumMap a = load_channel(cfg.channel_a, "--channel-a");
  const QuantumMap b = load_channel(cfg.channel_b, "--channel-b");
  const DivergenceSpec spec = spec_of(cfg);
  const SolverOptions opt = solver_options(cfg);
  io::TableWriter& w = sink.table("min-output", {"n", "family", "alpha", "same_input", "value", "lower_bound",
                                                 "per_copy", "fw_gap", "iterations", "converged"});
  bool all_converged = true;
  for (std::size_t n = 1; n <= cfg.copies; ++n) {
    const MinOutputResult r = solve_min_output(a, b, spec, n, cfg.same_input, opt);
    all_converged = all_converged && r.converged;
    w.row({static_cast<std::int64_t>(n), std::string(family_name(spec.family)), spec.alpha, cfg.same_input, r.value,
           r.lower_bound, r.value / static_cast<double>(n), r.fw_gap, static_cast<std::int64_t>(r.iterations),
           r.converged});
  }
  w.summary("all_converged", all_converged);
  return all_converged ? kExitOk : kExitSolver;
}

int chain_check(const QuantumMap& a, const QuantumMap& b, const Config& cfg, const std::string& command, Sink& sink) {
  DivergenceSpec spec = spec_of(cfg);
  if (spec.family != Family::measured && spec.family != Family::sandwiched && spec.family != Family::umegaki)
    throw ValidationError("--family: chain-check supports measured, sandwiched and umegaki");
  const SolverOptions opt = solver_options(cfg);
  const double bound = chain_rule_bound(a, b, spec, BoundMode::sound, opt);
  const double same = min_output_same_input(a, b, spec, 1, opt).value;
  const std::size_t in = a.in_dim();
  io::TableWriter& w = sink.table(command, {"trial", "y", "x1", "x2", "reference", "margin"});
  std::size_t below_x1 = 0, below_x2 = 0;
  double min_margin = kInfinity;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::uint64_t s = cfg.seed * 1000003ULL + 2 * t;
    const Matrix rho = random_density(2 * in, s, true);
    const Matrix sigma = random_density(2 * in, s + 1, true);
    const ChainRuleTerms terms = chain_rule_terms(a, b, rho, sigma, spec, bound);
    const double x1 = terms.reference + bound;
    const double x2 = terms.reference + same;
    if (terms.output < x1 - 1e-6) ++below_x1;
    if (terms.output < x2 - 1e-4) ++below_x2;
    min_margin = std::min(min_margin, terms.margin);
    w.row({static_cast<std::int64_t>(t), terms.output, x1, x2, terms.reference, terms.margin});
  }
  w.summary("trials", static_cast<std::int64_t>(cfg.trials));
  w.summary("channel_term", bound);
  w.summary("same_input_term", same);
  w.summary("min_margin", min_margin);
  w.summary("count_y_below_x1", static_cast<std::int64_t>(below_x1));
  w.summary("count_y_below_x2", static_cast<std::int64_t>(below_x2));
  return kExitOk;
}

int cmd_chain_check(const Config& cfg, Sink& sink) {
  Config c = cfg;
  c.family = cfg.chain_family;
  return chain_check(load_channel(cfg.channel_a, "--channel-a"), load_channel(cfg.channel_b, "--channel-b"), c,
                     "chain-check", sink);
}

int cmd_adversary(const Config& cfg, Sink& sink) {
  const QuantumMap a = load_channel(cfg.channel_a, "--channel-a");
  const QuantumMap b = load_channel(cfg.channel_b, "--channel-b");
  std::vector<AdversaryModel> models;
  if (cfg.model == "nonadaptive" || cfg.model == "both") models.push_back(AdversaryModel::nonadaptive);
  if (cfg.model == "adaptive" || cfg.model == "both") models.push_back(AdversaryModel::adaptive);
  if (models.empty()) throw ValidationError("--model: expected nonadaptive, adaptive or both");
  io::TableWriter& w = sink.table("adversary", {"n", "model", "beta_lower", "beta_upper", "upper_certified",
                                                "exponent_from_upper", "exponent_from_lower", "type1_worst",
                                                "oscillation"});
  bool clean = true;
  for (std::size_t n = 1; n <= cfg.n; ++n)
    for (AdversaryModel m : models) {
      GameOptions opt;
      opt.model = m;
      opt.mem_cap = cfg.mem_cap;
      opt.seed = cfg.seed;
      const GameBracket g = beta_game(a, b, n, cfg.eps, opt);
      const double dn = static_cast<double>(n);
      clean = clean && !g.oscillation && !g.type1_violation;
      w.row({static_cast<std::int64_t>(n), std::string(m == AdversaryModel::adaptive ? "adaptive" : "nonadaptive"),
             g.lower, g.upper, g.upper_certified, -std::log2(g.upper) / dn, -std::log2(g.lower) / dn, g.type1_worst,
             g.oscillation});
    }
  w.summary("epsilon", cfg.eps);
  w.summary("clean", clean);
  return kExitOk;
}

int cmd_accumulate(const Config& cfg, Sink& sink) {
  const QuantumMap a = load_channel(cfg.channel_a, "--channel-a");
  const QuantumMap b = load_channel(cfg.channel_b, "--channel-b");
  if (a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim())
    throw ValidationError("--channel-b: shape differs from --channel-a");
  const std::size_t d = a.in_dim();
  const Matrix rho = cfg.state_a.empty() ? Matrix(identity(d) / static_cast<double>(d)) : load_state(cfg.state_a, "--state-a");
  const Matrix sigma =
      cfg.state_b.empty() ? Matrix(identity(d) / static_cast<double>(d)) : load_state(cfg.state_b, "--state-b");
  const Dilation du = dilation_of(a), dv = dilation_of(b);
  AccumulationOptions opt;
  opt.solver = solver_options(cfg);
  io::TableWriter& w = sink.table("accumulate", {"n", "lhs", "rhs_sum", "correction", "m_choice", "alpha_choice", "c",
                                                 "c_prime", "condition_ok", "holds"});
  bool all_hold = true;
  for (std::size_t n = 1; n <= cfg.n; ++n) {
    const Strategy p = embedding_strategy(tensor_power(rho, n), d, n, du.env_dim);
    const Strategy q = embedding_strategy(tensor_power(sigma, n), d, n, dv.env_dim);
    const AccumulationReport r = reat_bound(std::vector<Dilation>(n, du), std::vector<Dilation>(n, dv), p, q, cfg.eps,
                                            cfg.c, opt);
    all_hold = all_hold && r.holds;
    w.row({static_cast<std::int64_t>(n), r.lhs_available ? io::Cell{r.lhs} : io::Cell{std::string("unavailable")},
           r.rhs_sum, r.correction, r.m_choice, r.alpha_choice, r.c,
           r.c_prime_defined ? io::Cell{r.c_prime} : io::Cell{std::string("")}, r.condition_ok, r.holds});
    if (!r.condition_ok) w.summary("condition_violation_n" + std::to_string(n), r.condition_violation);
  }
  w.summary("epsilon", cfg.eps);
  w.summary("all_hold", all_hold);
  return kExitOk;
}

int reproduce_sub_additivity(const Config& cfg, Sink& sink) {
  const QuantumMap a = gad_channel(0.5, 0.0);
  const DivergenceSpec spec{Family::measured, 1.0, 0.0};
  const SolverOptions opt = solver_options(cfg);
  io::TableWriter& w = sink.table("reproduce sm-a", {"p", "single_copy", "single_copy_sum", "two_copy", "gap"});
  std::size_t subadditive = 0;
  for (int k = 0; k <= 20; ++k) {
    const double p = 0.05 * k;
    const QuantumMap b = gad_channel(p, 0.9);
    const MinOutputResult one = min_output_same_input(a, b, spec, 1, opt);
    const MinOutputResult two = min_output_same_input(a, b, spec, 2, opt);
    // certified single-copy lower end against the two-copy witness value
    const double sum = 2.0 * one.lower_bound;
    if (two.value < sum - 1e-4) ++subadditive;
    w.row({p, one.value, sum, two.value, sum - two.value});
  }
  w.summary("count_two_copy_below_sum", static_cast<std::int64_t>(subadditive));
  return kExitOk;
}

int cmd_reproduce(const Config& cfg, Sink& sink) {
  if (cfg.figure == "sm-a") return reproduce_sub_additivity(cfg, sink);
  if (cfg.figure == "sm-b") {
    Config c = cfg;
    c.family = "measured";
    return chain_check(gad_channel(0.5, 0.0), gad_channel(0.5, 0.9), c, "reproduce sm-b", sink);
  }
  throw ValidationError("reproduce: figure must be sm-a or sm-b");
}

void add_channels(CLI::App* app, Config& cfg) {
  app->add_option("--channel-a", cfg.channel_a, "JSON channel spec for the first hypothesis");
  app->add_option("--channel-b", cfg.channel_b, "JSON channel spec for the second hypothesis");
}

void add_common(CLI::App* app, Config& cfg) {
  app->add_option("--seed", cfg.seed, "Random seed");
  app->add_option("--out", cfg.out, "Output file (default: stdout)");
  app->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--tol", cfg.tol, "Solver tolerance")->check(CLI::PositiveNumber);
}

void add_spec(CLI::App* app, Config& cfg) {
  app->add_option("--family", cfg.family, "Divergence family");
  app->add_option("--alpha", cfg.alpha, "Renyi order");
  app->add_option("--eps", cfg.eps, "Type-I error threshold for the hypothesis family");
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"divlab: adversarial quantum channel discrimination toolkit"};
  app.set_version_flag("--version", std::string(io::version()));
  app.require_subcommand(1);

  CLI::App* div = app.add_subcommand("divergence", "Divergence between two states");
  div->add_option("--state-a", cfg.state_a, "JSON state file (rho)")->required();
  div->add_option("--state-b", cfg.state_b, "JSON state file (sigma)")->required();
  add_spec(div, cfg);
  add_common(div, cfg);

  CLI::App* mo = app.add_subcommand("min-output", "Minimum output channel divergence");
  add_channels(mo, cfg);
  add_spec(mo, cfg);
  mo->add_option("--copies", cfg.copies, "Largest number of channel copies")->check(CLI::PositiveNumber);
  mo->add_flag("--same-input", cfg.same_input, "Feed both channels the same input");
  add_common(mo, cfg);

  CLI::App* cc = app.add_subcommand("chain-check", "Random test of the chain rule on R (x) A inputs");
  add_channels(cc, cfg);
  cc->add_option("--family", cfg.chain_family, "measured, sandwiched or umegaki");
  cc->add_option("--alpha", cfg.alpha, "Renyi order for sandwiched");
  cc->add_option("--trials", cfg.trials, "Number of random state pairs");
  add_common(cc, cfg);

  CLI::App* adv = app.add_subcommand("adversary", "Type-II error bracket of the discrimination game");
  add_channels(adv, cfg);
  adv->add_option("--eps", cfg.eps, "Type-I error threshold");
  adv->add_option("--n", cfg.n, "Largest number of rounds")->check(CLI::PositiveNumber);
  adv->add_option("--mem-cap", cfg.mem_cap, "Adversary memory dimension cap")->check(CLI::PositiveNumber);
  adv->add_option("--model", cfg.model, "nonadaptive, adaptive or both");
  add_common(adv, cfg);

  CLI::App* acc = app.add_subcommand("accumulate", "Relative entropy accumulation bound");
  add_channels(acc, cfg);
  acc->add_option("--state-a", cfg.state_a, "Input state for the first hypothesis (default: maximally mixed)");
  acc->add_option("--state-b", cfg.state_b, "Input state for the second hypothesis (default: maximally mixed)");
  acc->add_option("--eps", cfg.eps, "Type-I error threshold");
  acc->add_option("--n", cfg.n, "Largest number of rounds")->check(CLI::PositiveNumber);
  acc->add_option("--C", cfg.c, "Condition constant");
  add_common(acc, cfg);

  CLI::App* rep = app.add_subcommand("reproduce", "Regenerate figure data");
  rep->add_option("figure", cfg.figure, "sm-a or sm-b")->required();
  rep->add_option("--trials", cfg.trials, "Number of random state pairs (sm-b)");
  add_common(rep, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  int code = kExitOk;
  std::optional<Sink> sink;
  try {
    sink.emplace(cfg);
    if (div->parsed()) code = cmd_divergence(cfg, *sink);
    else if (mo->parsed()) code = cmd_min_output(cfg, *sink);
    else if (cc->parsed()) code = cmd_chain_check(cfg, *sink);
    else if (adv->parsed()) code = cmd_adversary(cfg, *sink);
    else if (acc->parsed()) code = cmd_accumulate(cfg, *sink);
    else code = cmd_reproduce(cfg, *sink);
    sink->finish();
  } catch (const ResourceError& e) {
    std::cerr << "divlab: resource limit: " << e.what() << "\n";
    if (sink) sink->fail(e.what());
    return kExitResource;
  } catch (const SolverError& e) {
    std::cerr << "divlab: solver failure: " << e.what() << "\n";
    if (sink) sink->fail(e.what());
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "divlab: " << e.what() << "\n";
    if (sink) sink->fail(e.what());
    return kExitValidation;
  }
  if (code == kExitSolver) std::cerr << "divlab: solver did not reach the requested tolerance\n";
  return code;
}
