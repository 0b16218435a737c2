#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "efcyc/chain.hpp"
#include "efcyc/estimate.hpp"
#include "efcyc/extension.hpp"
#include "efcyc/folner.hpp"
#include "efcyc/pipeline.hpp"
#include "efcyc/twisted.hpp"

namespace efcyc {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& field(const Json& j, const char* key, std::string_view where) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorCode::malformed_input, std::string(where) + ": missing field '" + key + "'");
  }
  return j.at(key);
}

inline Rational rational_from_json(const Json& j) {
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(ErrorCode::malformed_input, "not a rational: " + j.dump());
    }
  }
  if (j.is_number_integer()) return Rational(j.get<long>());
  fail(ErrorCode::malformed_input, "coefficients must be \"p/q\" strings, got " + j.dump());
}

}  // namespace detail

inline Json to_json(const Rational& q) { return format_rational(q); }

inline Json to_json(const GroupElement& g) {
  Json out = Json::array();
  for (std::int64_t x : g.coords()) out.push_back(x);
  return out;
}

/// Coordinates must already be canonical for `group`.
inline GroupElement element_from_json(const GroupDescriptor& group, const Json& j) {
  if (!j.is_array()) fail(ErrorCode::malformed_input, "group elements are integer arrays, got " + j.dump());
  GroupElement g;
  for (const Json& x : j) {
    if (!x.is_number_integer()) fail(ErrorCode::malformed_input, "non-integer coordinate in " + j.dump());
    g.coords().push_back(x.get<std::int64_t>());
  }
  if (!group.contains(g)) {
    fail(ErrorCode::descriptor_mismatch, j.dump() + " is not a canonical element of " + group.to_string());
  }
  return g;
}

inline Json to_json(const Chain& c) {
  Json terms = Json::array();
  for (const auto& [t, a] : c.terms()) {
    Json tuple = Json::array();
    for (std::size_t j = 0; j < t.arity(); ++j) tuple.push_back(to_json(t.entry(j)));
    terms.push_back(Json{{"coeff", format_rational(a)}, {"tuple", std::move(tuple)}});
  }
  return Json{{"degree", c.degree()}, {"group", c.group().to_string()}, {"terms", std::move(terms)}};
}

namespace detail {

template <class Add>
void read_terms(const GroupDescriptor& group, int degree, const Json& j, Add add) {
  const Json& terms = field(j, "terms", "chain");
  if (!terms.is_array()) fail(ErrorCode::malformed_input, "chain terms must be an array");
  std::vector<GroupElement> entries;
  for (const Json& term : terms) {
    const Json& tuple = field(term, "tuple", "chain term");
    if (!tuple.is_array()) fail(ErrorCode::malformed_input, "tuple must be an array of elements");
    if (tuple.size() != static_cast<std::size_t>(degree) + 1) {
      fail(ErrorCode::degree_mismatch, "tuple " + tuple.dump() + " in a degree-" + std::to_string(degree) + " chain");
    }
    entries.clear();
    for (const Json& e : tuple) entries.push_back(element_from_json(group, e));
    add(entries, field(term, "coeff", "chain term"));
  }
}

inline int degree_from_json(const Json& j) {
  const Json& d = field(j, "degree", "chain");
  if (!d.is_number_integer() || d.get<int>() < 0) fail(ErrorCode::malformed_input, "degree must be a non-negative integer");
  return d.get<int>();
}

inline GroupDescriptor group_from_json(const Json& j, const std::optional<GroupDescriptor>& expected) {
  const Json& g = field(j, "group", "chain");
  if (!g.is_string()) fail(ErrorCode::malformed_input, "group must be a string");
  GroupDescriptor group = parse_group(g.get<std::string>());
  if (expected && !(group == *expected)) {
    fail(ErrorCode::inconsistent_groups, "chain over " + group.to_string() + " where " + expected->to_string() +
                                             " was expected");
  }
  return group;
}

}  // namespace detail

inline Chain chain_from_json(const Json& j, const std::optional<GroupDescriptor>& expected = std::nullopt) {
  const GroupDescriptor group = detail::group_from_json(j, expected);
  Chain c(group, detail::degree_from_json(j));
  detail::read_terms(group, c.degree(), j, [&](std::span<const GroupElement> entries, const Json& coeff) {
    c.add(entries, detail::rational_from_json(coeff));
  });
  return c;
}

inline Json to_json(const NormedModule& A) {
  Json action = Json::array();
  for (std::int64_t x : A.generator().image()) action.push_back(x);
  Json character = Json::array();
  for (std::int64_t w : A.character()) character.push_back(w);
  Json out{{"dimension", A.dimension()},
           {"quotient", "Z/" + std::to_string(A.modulus())},
           {"action", std::move(action)},
           {"character", std::move(character)}};
  if (A.is_quotient()) out["coinvariants_of"] = A.killed();
  return out;
}

/// {dimension, quotient: "Z/m", action: [+-j, ...] (image of e_i under the
/// generator, 1-based) or [[...]], character?: weights per coordinate of the
/// group}. Without a character every coordinate has weight 1 except a
/// Heisenberg center.
inline NormedModule module_from_json(const GroupDescriptor& group, const Json& j) {
  const Json& dim = detail::field(j, "dimension", "module");
  if (!dim.is_number_integer() || dim.get<std::int64_t>() < 1) fail(ErrorCode::invalid_module, "dimension must be positive");
  const Json& q = detail::field(j, "quotient", "module");
  if (!q.is_string()) fail(ErrorCode::invalid_module, "module quotient must be a string \"Z/m\"");
  const GroupDescriptor quotient = parse_group(q.get<std::string>());
  std::int64_t modulus = 1;
  if (quotient.kind() == GroupDescriptor::Kind::FiniteCyclic) {
    modulus = quotient.parameter();
  } else if (!(quotient == GroupDescriptor::trivial())) {
    fail(ErrorCode::invalid_module, "module quotient must be cyclic, got " + quotient.to_string());
  }
  Json action = detail::field(j, "action", "module");
  if (action.is_array() && action.size() == 1 && action[0].is_array()) action = action[0];
  if (!action.is_array()) fail(ErrorCode::invalid_module, "action must be a signed permutation");
  std::vector<std::int64_t> image;
  for (const Json& x : action) {
    if (!x.is_number_integer()) fail(ErrorCode::invalid_module, "action entries must be non-zero integers");
    image.push_back(x.get<std::int64_t>());
  }
  if (image.size() != dim.get<std::size_t>()) fail(ErrorCode::invalid_module, "action length differs from dimension");
  std::vector<std::int64_t> character(group.dimension(), 1);
  for (const auto& a : group.atoms()) {
    if (a.kind == GroupDescriptor::Kind::Heisenberg3) character[a.offset + 2] = 0;
  }
  if (j.contains("character")) {
    character.clear();
    for (const Json& w : j.at("character")) {
      if (!w.is_number_integer()) fail(ErrorCode::invalid_module, "character weights must be integers");
      character.push_back(w.get<std::int64_t>());
    }
  }
  std::int64_t killed = 0;
  if (j.contains("coinvariants_of")) killed = j.at("coinvariants_of").get<std::int64_t>();
  return NormedModule(group, modulus, SignedPermutation(std::move(image)), std::move(character), killed);
}

inline Json to_json(const TwistedChain& c) {
  Json terms = Json::array();
  for (const auto& [t, v] : c.terms()) {
    Json tuple = Json::array();
    for (std::size_t j = 0; j < t.arity(); ++j) tuple.push_back(to_json(t.entry(j)));
    Json coeff = Json::array();
    for (const Rational& x : v) coeff.push_back(format_rational(x));
    terms.push_back(Json{{"coeff", std::move(coeff)}, {"tuple", std::move(tuple)}});
  }
  return Json{{"degree", c.degree()},
              {"group", c.group().to_string()},
              {"module", to_json(c.module())},
              {"terms", std::move(terms)}};
}

inline ModuleVector module_vector_from_json(const NormedModule& A, const Json& j) {
  if (!j.is_array()) fail(ErrorCode::malformed_input, "twisted coefficients are arrays of \"p/q\" strings");
  ModuleVector v;
  for (const Json& x : j) v.push_back(detail::rational_from_json(x));
  A.require(v);
  return v;
}

/// Reads a twisted chain; its module is `module` unless the JSON embeds one.
inline TwistedChain twisted_chain_from_json(const Json& j, std::shared_ptr<const NormedModule> module = nullptr,
                                            const std::optional<GroupDescriptor>& expected = std::nullopt) {
  const GroupDescriptor group = detail::group_from_json(j, expected);
  if (j.contains("module")) {
    auto embedded = std::make_shared<const NormedModule>(module_from_json(group, j.at("module")));
    if (module && !(*module == *embedded)) fail(ErrorCode::invalid_module, "chain module differs from the configured module");
    if (!module) module = std::move(embedded);
  }
  if (!module) fail(ErrorCode::invalid_module, "twisted chain without a module");
  if (!(module->group() == group)) fail(ErrorCode::inconsistent_groups, "module and chain over different groups");
  TwistedChain c(module, detail::degree_from_json(j));
  detail::read_terms(group, c.degree(), j, [&](std::span<const GroupElement> entries, const Json& coeff) {
    if (coeff.is_array()) {
      c.add(entries, module_vector_from_json(*module, coeff));
    } else if (module->dimension() == 1) {
      c.add(entries, ModuleVector{detail::rational_from_json(coeff)});
    } else {
      fail(ErrorCode::malformed_input, "twisted coefficient must be an array");
    }
  });
  return c;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::malformed_input, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::malformed_input, path.string() + ": " + e.what());
  }
}

inline Json to_json(const EstimateCertificate& cert) {
  Json S = Json::array();
  for (const GroupElement& s : cert.S) S.push_back(to_json(s));
  return Json{{"epsilon", to_json(cert.epsilon)},
              {"S", std::move(S)},
              {"K", to_json(cert.K)},
              {"F_size", cert.F_size},
              {"boundary_size", cert.boundary_size},
              {"ratio", to_json(cert.ratio)},
              {"pushforward_norm", to_json(cert.pushforward_norm)},
              {"lhs", to_json(cert.lhs)},
              {"rhs", to_json(cert.rhs)},
              {"holds", cert.holds},
              {"K_sum", to_json(cert.K_sum)},
              {"rhs_sum", to_json(cert.rhs_sum)},
              {"holds_sum", cert.holds_sum},
              {"coarse_rhs", to_json(cert.coarse_rhs)},
              {"coarse_holds", cert.coarse_holds}};
}

inline std::string rows_to_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream out;
  out << "k,F_size,ratio,norm,bound\n";
  for (const ConvergenceRow& r : rows) {
    out << r.k << ',' << r.F_size << ',' << format_rational(r.ratio) << ',' << format_rational(r.norm) << ','
        << format_rational(r.bound) << '\n';
  }
  return out.str();
}

inline Json to_json(const std::vector<ConvergenceRow>& rows) {
  Json out = Json::array();
  for (const ConvergenceRow& r : rows) {
    out.push_back(Json{{"k", r.k},
                       {"F_size", r.F_size},
                       {"ratio", to_json(r.ratio)},
                       {"norm", to_json(r.norm)},
                       {"bound", to_json(r.bound)}});
  }
  return out;
}

/// A parsed run configuration. Chains may be given inline or as a path
/// relative to the config file; `z` and `b` may be a single chain or a list.
struct Config {
  AmenableExtension ext;
  Json chain;
  std::optional<Json> module;
  std::optional<std::vector<Json>> z;
  std::optional<std::vector<Json>> b;
  std::string folner_kind = "interval";
  bool adaptive = false;
  std::int64_t radius = 1;
  Rational epsilon = Rational(1, 1000);
};

namespace detail {

inline Json resolve_chain(const Json& j, const std::filesystem::path& base) {
  if (j.is_string()) return read_json_file(base / j.get<std::string>());
  if (!j.is_object()) fail(ErrorCode::malformed_input, "chain must be an object or a path");
  return j;
}

inline std::vector<Json> resolve_chain_list(const Json& j, const std::filesystem::path& base) {
  std::vector<Json> out;
  if (j.is_array()) {
    for (const Json& x : j) out.push_back(resolve_chain(x, base));
  } else {
    out.push_back(resolve_chain(j, base));
  }
  return out;
}

}  // namespace detail

inline Config config_from_json(const Json& j, const std::filesystem::path& base = ".") {
  if (!j.is_object()) fail(ErrorCode::malformed_input, "config must be a JSON object");
  const Json& group = detail::field(j, "group", "config");
  const Json& normal = detail::field(j, "normal", "config");
  if (!group.is_string() || !normal.is_string()) fail(ErrorCode::malformed_input, "group and normal must be strings");
  Config cfg{AmenableExtension::parse(group.get<std::string>(), normal.get<std::string>()), Json{}};
  if (j.contains("quotient")) {
    const GroupDescriptor q = parse_group(j.at("quotient").get<std::string>());
    if (!(q == cfg.ext.quotient())) {
      fail(ErrorCode::inconsistent_groups, "quotient " + q.to_string() + " does not match " + cfg.ext.to_string());
    }
  }
  cfg.chain = detail::resolve_chain(detail::field(j, "chain", "config"), base);
  if (j.contains("module")) cfg.module = j.at("module");
  if (j.contains("z")) cfg.z = detail::resolve_chain_list(j.at("z"), base);
  if (j.contains("b")) cfg.b = detail::resolve_chain_list(j.at("b"), base);
  if (j.contains("folner")) {
    const Json& f = j.at("folner");
    if (f.is_string()) {
      cfg.folner_kind = f.get<std::string>();
    } else {
      cfg.folner_kind = detail::field(f, "kind", "folner").get<std::string>();
      if (f.contains("params") && f.at("params").contains("adaptive")) cfg.adaptive = f.at("params").at("adaptive").get<bool>();
    }
  }
  if (cfg.folner_kind == "adaptive") cfg.adaptive = true;
  if (j.contains("radius")) cfg.radius = j.at("radius").get<std::int64_t>();
  if (j.contains("epsilon")) cfg.epsilon = detail::rational_from_json(j.at("epsilon"));
  return cfg;
}

inline Config load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

/// Folner sequence named by the config; adaptive configs start from the
/// catalogued kind and switch inside the pipeline.
inline FolnerSequence folner_from_config(const Config& cfg) {
  if (cfg.folner_kind == "adaptive") {
    const GroupDescriptor& n = cfg.ext.normal();
    if (n.is_finite()) return FolnerSequence(cfg.ext, FolnerKind::WholeFiniteGroup);
    if (n.kind() == GroupDescriptor::Kind::Heisenberg3) return FolnerSequence(cfg.ext, FolnerKind::HeisenbergBox);
    return FolnerSequence(cfg.ext, FolnerKind::Box);
  }
  return FolnerSequence(cfg.ext, parse_folner_kind(cfg.folner_kind));
}

}  // namespace efcyc
