#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "efcyc/io.hpp"
#include "efcyc/pipeline.hpp"
#include "efcyc/seminorm.hpp"
#include "efcyc/twisted.hpp"

namespace efcyc {

namespace cli {

struct ProblemOptions {
  std::string config;
  std::string group;
  std::string normal;
  std::string chain;
  std::string folner;
};

inline void add_problem_options(CLI::App* cmd, ProblemOptions& o) {
  cmd->add_option("--config", o.config, "run configuration (JSON)");
  cmd->add_option("--group", o.group, "group spec, e.g. Z^2");
  cmd->add_option("--normal", o.normal, "normal subgroup spec, e.g. Zx1");
  cmd->add_option("--chain", o.chain, "chain JSON file");
  cmd->add_option("--folner", o.folner, "interval, box, heisenberg_box, whole or adaptive");
}

inline Config load_problem(const ProblemOptions& o) {
  if (!o.config.empty()) {
    Config cfg = load_config(o.config);
    if (!o.folner.empty()) {
      cfg.folner_kind = o.folner;
      cfg.adaptive = o.folner == "adaptive";
    }
    return cfg;
  }
  if (o.group.empty() || o.normal.empty() || o.chain.empty()) {
    fail(ErrorCode::malformed_input, "either --config or all of --group, --normal, --chain are required");
  }
  Json j{{"group", o.group}, {"normal", o.normal}, {"chain", o.chain}};
  if (!o.folner.empty()) j["folner"] = o.folner;
  return config_from_json(j, std::filesystem::current_path());
}

inline Chain zero_chain(const GroupDescriptor& g, int degree) { return Chain(g, degree); }

inline RecipeInput recipe_from_config(const Config& cfg) {
  RecipeInput in{cfg.ext, chain_from_json(cfg.chain, cfg.ext.group()), {}, {}, folner_from_config(cfg), cfg.adaptive, 0};
  const int n = in.c.degree();
  if (cfg.z) {
    for (const Json& j : *cfg.z) in.z.push_back(chain_from_json(j, cfg.ext.quotient()));
  } else {
    in.z.push_back(zero_chain(cfg.ext.quotient(), n));
  }
  if (cfg.b) {
    for (const Json& j : *cfg.b) in.b.push_back(chain_from_json(j, cfg.ext.group()));
  } else {
    // fillings of z_m - c-bar over Q, lifted along the section
    detail::require_cycle(in.c);
    const Chain cbar = pushforward(cfg.ext, in.c);
    for (std::size_t m = 0; m < in.z.size(); ++m) {
      auto bbar = fill_boundary(in.z[m] - cbar, Truncation{{}, cfg.radius});
      if (!bbar) {
        fail(ErrorCode::infeasible, "no filling of z_" + std::to_string(m) + " - c-bar within radius " +
                                        std::to_string(cfg.radius));
      }
      in.b.push_back(lift(cfg.ext, *bbar));
    }
  }
  return make_recipe(std::move(in));
}

inline std::shared_ptr<const NormedModule> module_from_config(const Config& cfg) {
  return std::make_shared<const NormedModule>(module_from_json(cfg.ext.group(), *cfg.module));
}

inline TwistedRecipeInput twisted_recipe_from_config(const Config& cfg) {
  auto A = module_from_config(cfg);
  TwistedRecipeInput in{cfg.ext, twisted_chain_from_json(cfg.chain, A, cfg.ext.group()), {}, {}, folner_from_config(cfg),
                        cfg.adaptive, cfg.epsilon};
  auto AN = std::make_shared<const NormedModule>(A->coinvariants(cfg.ext));
  if (cfg.z) {
    for (const Json& j : *cfg.z) in.z.push_back(twisted_chain_from_json(j, AN, cfg.ext.quotient()));
  } else {
    in.z.push_back(twisted_pushforward(cfg.ext, in.c));
  }
  if (cfg.b) {
    for (const Json& j : *cfg.b) in.b.push_back(twisted_chain_from_json(j, A, cfg.ext.group()));
  } else if (!cfg.z) {
    in.b.emplace_back(A, in.c.degree() + 1);
  } else {
    fail(ErrorCode::unsupported, "twisted configs with z must also supply the fillings b");
  }
  return make_recipe(std::move(in));
}

template <class ChainT>
std::vector<GroupElement> adaptive_S(const AmenableExtension& ext, const ChainT& c, const Rational& eps) {
  return detail::remainder_data(ext, c, eps).S;
}

template <class ChainT>
FolnerSet folner_set(const Config& cfg, const ChainT& c, std::int64_t k) {
  if (cfg.adaptive) return FolnerSequence::adaptive(cfg.ext, adaptive_S(cfg.ext, c, cfg.epsilon)).at(k);
  return folner_from_config(cfg).at(k);
}

inline std::string rational_line(const Rational& q) { return format_rational(q) + "\n"; }

}  // namespace cli

/// Entry point of the command-line tool; returns the process exit status
/// (0 success, 2 validation failure, 3 no filling within the truncation).
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Efficient cycles via Folner averaging over amenable normal subgroups", "efcyc"};
  app.require_subcommand(1);

  std::string norm_file;
  auto* norm = app.add_subcommand("norm", "print the l1-norm of a chain");
  norm->add_option("chain", norm_file, "chain JSON file")->required();

  cli::ProblemOptions avg_opts;
  std::int64_t avg_k = 1;
  auto* avg = app.add_subcommand("average", "average a chain over F_k");
  cli::add_problem_options(avg, avg_opts);
  avg->add_option("--k", avg_k, "Folner index")->required();

  cli::ProblemOptions est_opts;
  std::int64_t est_k = 1;
  std::string est_eps;
  auto* est = app.add_subcommand("estimate", "certify the push-forward estimate at F_k");
  cli::add_problem_options(est, est_opts);
  est->add_option("--k", est_k, "Folner index")->required();
  est->add_option("--epsilon", est_eps, "epsilon for twisted coefficients (p/q)");

  std::string semi_chain;
  std::int64_t semi_radius = 1;
  auto* semi = app.add_subcommand("seminorm", "upper bound for the l1-seminorm of a cycle");
  semi->add_option("--chain", semi_chain, "cycle JSON file")->required();
  semi->add_option("--radius", semi_radius, "truncation radius");

  std::string conv_config, conv_format = "csv";
  std::int64_t conv_kmax = 1;
  std::size_t conv_m = 0;
  unsigned conv_threads = 0;
  auto* conv = app.add_subcommand("converge", "convergence table k = 1..kmax");
  conv->add_option("--config", conv_config, "run configuration (JSON)")->required();
  conv->add_option("--kmax", conv_kmax, "largest Folner index")->required();
  conv->add_option("--m", conv_m, "index of the filling");
  conv->add_option("--format", conv_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  conv->add_option("--threads", conv_threads, "worker threads (0: all cores)");

  std::string rec_config;
  std::int64_t rec_k = 1;
  std::size_t rec_m = 0;
  auto* rec = app.add_subcommand("recipe", "efficient cycle c_{k,m}");
  rec->add_option("--config", rec_config, "run configuration (JSON)")->required();
  rec->add_option("--k", rec_k, "Folner index")->required();
  rec->add_option("--m", rec_m, "index of the filling");

  auto report = [&](const char* code, const std::string& message) {
    err << Json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
  };

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report("malformed_input", e.what());
    return 2;
  }

  try {
    if (*norm) {
      const Json j = read_json_file(norm_file);
      if (j.contains("module")) {
        out << cli::rational_line(l1_norm(twisted_chain_from_json(j)));
      } else {
        out << cli::rational_line(l1_norm(chain_from_json(j)));
      }
    } else if (*avg) {
      const Config cfg = cli::load_problem(avg_opts);
      if (cfg.module) {
        const TwistedChain c = twisted_chain_from_json(cfg.chain, cli::module_from_config(cfg), cfg.ext.group());
        out << to_json(twisted_average(cfg.ext, c, cli::folner_set(cfg, c, avg_k))).dump(2) << "\n";
      } else {
        const Chain c = chain_from_json(cfg.chain, cfg.ext.group());
        out << to_json(average(cfg.ext, c, cli::folner_set(cfg, c, avg_k))).dump(2) << "\n";
      }
    } else if (*est) {
      Config cfg = cli::load_problem(est_opts);
      if (!est_eps.empty()) cfg.epsilon = parse_rational(est_eps);
      if (cfg.module) {
        const TwistedChain c = twisted_chain_from_json(cfg.chain, cli::module_from_config(cfg), cfg.ext.group());
        out << to_json(twisted_estimate(cfg.ext, c, cli::folner_set(cfg, c, est_k), cfg.epsilon)).dump(2) << "\n";
      } else {
        const Chain c = chain_from_json(cfg.chain, cfg.ext.group());
        out << to_json(estimate(cfg.ext, c, cli::folner_set(cfg, c, est_k))).dump(2) << "\n";
      }
    } else if (*semi) {
      const Json j = read_json_file(semi_chain);
      if (j.contains("module")) fail(ErrorCode::unsupported, "the seminorm oracle handles trivial coefficients only");
      const SeminormBound r = seminorm_upper_bound(chain_from_json(j), Truncation{{}, semi_radius});
      out << Json{{"value", format_rational(r.value)}, {"witness", to_json(r.witness)}}.dump(2) << "\n";
    } else if (*conv) {
      const Config cfg = load_config(conv_config);
      const std::vector<ConvergenceRow> rows =
          cfg.module ? convergence_experiment(cli::twisted_recipe_from_config(cfg), conv_kmax, conv_m, conv_threads)
                     : convergence_experiment(cli::recipe_from_config(cfg), conv_kmax, conv_m, conv_threads);
      if (conv_format == "csv") {
        out << rows_to_csv(rows);
      } else {
        out << to_json(rows).dump(2) << "\n";
      }
    } else if (*rec) {
      const Config cfg = load_config(rec_config);
      Json j;
      if (cfg.module) {
        const TwistedChain c = efficient_cycle(cli::twisted_recipe_from_config(cfg), rec_k, rec_m);
        j = to_json(c);
        j["norm"] = format_rational(l1_norm(c));
      } else {
        const Chain c = efficient_cycle(cli::recipe_from_config(cfg), rec_k, rec_m);
        j = to_json(c);
        j["norm"] = format_rational(l1_norm(c));
      }
      out << j.dump(2) << "\n";
    }
  } catch (const Error& e) {
    report(to_string(e.code()), e.what());
    return e.code() == ErrorCode::infeasible ? 3 : 2;
  } catch (const nlohmann::json::exception& e) {
    report("malformed_input", e.what());
    return 2;
  }
  return 0;
}

}  // namespace efcyc
