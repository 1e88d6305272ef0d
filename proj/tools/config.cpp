#include <fstream>
#include <set>
#include <string>
#include <type_traits>

#include "cli.hpp"
#include "tmedit/errors.hpp"

namespace tmedit::cli {
namespace {

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw UsageError("config: " + where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw UsageError("config: unknown key " + where + "." + key);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw UsageError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_unsigned()) throw UsageError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw UsageError("");
    } else {
      if (!it->is_string()) throw UsageError("");
    }
    out = it->template get<T>();
  } catch (const std::exception&) {
    throw UsageError("config: bad value for " + where + "." + key);
  }
}

}  // namespace

Config Config::from_json(const json& j) {
  Config c;
  c.merge_json(j);
  return c;
}

void Config::merge_json(const json& j) {
  check_keys(j, "<root>",
             {"seed", "max_length", "retrieval", "alignment", "edits", "rollin",
              "synth", "realign", "decode"});
  read(j, "seed", "<root>", seed);
  read(j, "max_length", "<root>", max_length);
  if (j.contains("retrieval")) {
    const auto& s = j["retrieval"];
    check_keys(s, "retrieval", {"tau", "n_max", "exclude_self", "granularity"});
    read(s, "tau", "retrieval", tau);
    read(s, "n_max", "retrieval", n_max);
    read(s, "exclude_self", "retrieval", exclude_self);
    read(s, "granularity", "retrieval", granularity);
  }
  if (j.contains("alignment")) {
    check_keys(j["alignment"], "alignment", {"k"});
    read(j["alignment"], "k", "alignment", k);
  }
  if (j.contains("edits")) {
    check_keys(j["edits"], "edits", {"k_max"});
    read(j["edits"], "k_max", "edits", k_max);
  }
  if (j.contains("rollin")) {
    const auto& s = j["rollin"];
    check_keys(s, "rollin",
               {"alpha", "beta", "gamma", "delta", "epsilon", "n_random",
                "extra_insert_mean", "refinement_states", "filler"});
    read(s, "alpha", "rollin", rollin.alpha);
    read(s, "beta", "rollin", rollin.beta);
    read(s, "gamma", "rollin", rollin.gamma);
    read(s, "delta", "rollin", rollin.delta);
    read(s, "epsilon", "rollin", rollin.epsilon);
    read(s, "n_random", "rollin", rollin.n_random);
    read(s, "extra_insert_mean", "rollin", rollin.extra_insert_mean);
    read(s, "refinement_states", "rollin", rollin.refinement_states);
    read(s, "filler", "rollin", filler);
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    check_keys(s, "synth", {"n", "r", "f"});
    read(s, "n", "synth", synth.n);
    read(s, "r", "synth", synth.r);
    read(s, "f", "synth", synth.f);
  }
  if (j.contains("realign")) {
    const auto& s = j["realign"];
    check_keys(s, "realign",
               {"d_max", "steps", "step_size", "t0", "t_final", "mu_final",
                "var_min", "var_max"});
    read(s, "d_max", "realign", realign.d_max);
    read(s, "steps", "realign", realign.steps);
    read(s, "step_size", "realign", realign.step_size);
    read(s, "t0", "realign", realign.t0);
    read(s, "t_final", "realign", realign.t_final);
    read(s, "mu_final", "realign", realign.mu_final);
    read(s, "var_min", "realign", realign.var_min);
    read(s, "var_max", "realign", realign.var_max);
  }
  if (j.contains("decode")) {
    const auto& s = j["decode"];
    check_keys(s, "decode",
               {"max_refinement_iters", "zero_plh_penalty", "realign", "policy"});
    read(s, "max_refinement_iters", "decode", decode.max_refinement_iters);
    read(s, "zero_plh_penalty", "decode", decode.zero_plh_penalty);
    read(s, "realign", "decode", decode.realign);
    read(s, "policy", "decode", policy);
  }
}

json Config::to_json() const {
  return {
      {"seed", seed},
      {"max_length", max_length},
      {"retrieval",
       {{"tau", tau},
        {"n_max", n_max},
        {"exclude_self", exclude_self},
        {"granularity", granularity}}},
      {"alignment", {{"k", k}}},
      {"edits", {{"k_max", k_max}}},
      {"rollin",
       {{"alpha", rollin.alpha},
        {"beta", rollin.beta},
        {"gamma", rollin.gamma},
        {"delta", rollin.delta},
        {"epsilon", rollin.epsilon},
        {"n_random", rollin.n_random},
        {"extra_insert_mean", rollin.extra_insert_mean},
        {"refinement_states", rollin.refinement_states},
        {"filler", filler}}},
      {"synth", {{"n", synth.n}, {"r", synth.r}, {"f", synth.f}}},
      {"realign",
       {{"d_max", realign.d_max},
        {"steps", realign.steps},
        {"step_size", realign.step_size},
        {"t0", realign.t0},
        {"t_final", realign.t_final},
        {"mu_final", realign.mu_final},
        {"var_min", realign.var_min},
        {"var_max", realign.var_max}}},
      {"decode",
       {{"max_refinement_iters", decode.max_refinement_iters},
        {"zero_plh_penalty", decode.zero_plh_penalty},
        {"realign", decode.realign},
        {"policy", policy}}},
  };
}

void Config::finalize() {
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("config: tau must lie in [0, 1]");
  if (n_max < 1) throw UsageError("config: n_max must be >= 1");
  if (k < 1) throw UsageError("config: k must be >= 1");
  if (k_max < 1) throw UsageError("config: k_max must be >= 1");
  if (max_length < 3) throw UsageError("config: max_length must be >= 3");
  granularity_mode();
  if (filler != "uniform" && filler != "reference" && filler != "adversarial") {
    throw UsageError("config: unknown filler " + filler);
  }
  if (synth.n < 1 || !(synth.r > 0.0 && synth.r <= 1.0) || !(synth.f >= 0.0)) {
    throw UsageError("config: synth needs n >= 1, r in (0, 1], f >= 0");
  }
  rollin.seed = seed;
  rollin.k = k;
  rollin.k_max = k_max;
  rollin.validate();
  realign.validate();
  decode.n_max = n_max;
  decode.k_max = k_max;
  decode.realign_cfg = realign;
  decode.validate();
}

RetrieveOptions Config::retrieve_options() const {
  RetrieveOptions o;
  o.tau = tau;
  o.n_max = n_max;
  o.exclude_self = exclude_self;
  return o;
}

Granularity Config::granularity_mode() const {
  if (granularity == "token") return Granularity::kToken;
  if (granularity == "char") return Granularity::kCharacter;
  throw UsageError("config: granularity must be token or char");
}

}  // namespace tmedit::cli
