#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

#include "branchlab/offspring.hpp"

namespace branchlab
{

//! Invalid configuration; `pointer` is the JSON pointer of the offending node.
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::string pointer, std::string const& message)
        : std::runtime_error(pointer + ": " + message)
        , pointer_(std::move(pointer))
    {
    }

    std::string const& pointer() const { return pointer_; }

  private:
    std::string pointer_;
};

namespace json_field
{
// Fetch obj[key] converted to T, or throw ConfigError naming the path.
template<class T>
T required(nlohmann::json const& obj, char const* key, std::string const& at)
{
    std::string const here = at + "/" + key;
    if (!obj.is_object() || !obj.contains(key))
    {
        throw ConfigError(here, "missing required field");
    }
    try
    {
        return obj.at(key).get<T>();
    }
    catch (nlohmann::json::exception const&)
    {
        throw ConfigError(here, "wrong type");
    }
}

template<class T>
T optional(nlohmann::json const& obj,
           char const* key,
           std::string const& at,
           T fallback)
{
    if (!obj.is_object() || !obj.contains(key))
    {
        return fallback;
    }
    return required<T>(obj, key, at);
}
}  // namespace json_field

// {"family": "...", "params": {...}}. Custom laws serialize only when built
// from a pmf.
nlohmann::json to_json(OffspringSpec const& spec);
OffspringSpec offspring_from_json(nlohmann::json const& j,
                                  std::string const& at = "");

// {"a": rate, "offspring": {...}}
nlohmann::json to_json(ProcessParams const& params);
ProcessParams process_from_json(nlohmann::json const& j,
                                std::string const& at = "");

}  // namespace branchlab
