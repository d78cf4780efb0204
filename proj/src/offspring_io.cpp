#include "branchlab/offspring_io.hpp"

namespace branchlab
{
using nlohmann::json;
using json_field::required;

json to_json(OffspringSpec const& spec)
{
    json params = json::object();
    std::visit(
        [&](auto const& law) {
            using L = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<L, law::Geometric>)
            {
                params["p"] = law.p;
            }
            else if constexpr (std::is_same_v<L, law::Poisson>)
            {
                params["mu"] = law.mu;
            }
            else if constexpr (std::is_same_v<L, law::BirthDeath>)
            {
                params["a1"] = law.a1;
                params["a2"] = law.a2;
            }
            else if constexpr (std::is_same_v<L, law::StableCritical>
                               || std::is_same_v<L, law::Sibuya>)
            {
                params["alpha"] = law.alpha;
            }
            else if constexpr (std::is_same_v<L, law::GeneralizedNeveu>)
            {
                params["b"] = law.b;
                params["c"] = law.c;
            }
            else if constexpr (std::is_same_v<L, law::LuriaDelbruck>)
            {
                params["b"] = law.b;
            }
            else if constexpr (std::is_same_v<L, law::Custom>)
            {
                if (law.pmf.empty())
                {
                    throw std::invalid_argument(
                        "custom law without a pmf cannot be serialized");
                }
                params["pmf"] = law.pmf;
            }
        },
        spec.law());
    return json{{"family", spec.family()}, {"params", params}};
}

OffspringSpec offspring_from_json(json const& j, std::string const& at)
{
    if (!j.is_object())
    {
        throw ConfigError(at, "offspring law must be an object");
    }
    auto const family = required<std::string>(j, "family", at);
    json const empty = json::object();
    json const& p = j.contains("params") ? j.at("params") : empty;
    std::string const pat = at + "/params";
    if (!p.is_object())
    {
        throw ConfigError(pat, "params must be an object");
    }

    auto build = [&]() -> OffspringSpec::Law {
        if (family == "geometric")
            return law::Geometric{required<double>(p, "p", pat)};
        if (family == "poisson")
            return law::Poisson{required<double>(p, "mu", pat)};
        if (family == "birth_death")
            return law::BirthDeath{required<double>(p, "a1", pat),
                                   required<double>(p, "a2", pat)};
        if (family == "log_supercritical")
            return law::LogSupercritical{};
        if (family == "stable_critical")
            return law::StableCritical{required<double>(p, "alpha", pat)};
        if (family == "neveu")
            return law::NeveuHarmonic{};
        if (family == "generalized_neveu")
            return law::GeneralizedNeveu{required<double>(p, "b", pat),
                                         required<double>(p, "c", pat)};
        if (family == "luria_delbruck")
            return law::LuriaDelbruck{required<double>(p, "b", pat)};
        if (family == "sibuya")
            return law::Sibuya{required<double>(p, "alpha", pat)};
        if (family == "custom")
        {
            auto pmf = required<std::vector<double>>(p, "pmf", pat);
            try
            {
                return law::Custom::from_pmf(std::move(pmf));
            }
            catch (std::invalid_argument const& e)
            {
                throw ConfigError(pat + "/pmf", e.what());
            }
        }
        throw ConfigError(at + "/family", "unknown family '" + family + "'");
    };
    auto law = build();
    try
    {
        return OffspringSpec(std::move(law));
    }
    catch (std::invalid_argument const& e)
    {
        throw ConfigError(pat, e.what());
    }
}

json to_json(ProcessParams const& params)
{
    return json{{"a", params.a}, {"offspring", to_json(params.offspring)}};
}

ProcessParams process_from_json(json const& j, std::string const& at)
{
    double const a = required<double>(j, "a", at);
    if (!(a > 0.0 && std::isfinite(a)))
    {
        throw ConfigError(at + "/a", "lifetime rate must be positive");
    }
    if (!j.contains("offspring"))
    {
        throw ConfigError(at + "/offspring", "missing required field");
    }
    return ProcessParams(a,
                         offspring_from_json(j.at("offspring"),
                                             at + "/offspring"));
}

}  // namespace branchlab
