#pragma once

#include "pktffr/errors.hpp"

#include <json.hpp>
#include <set>
#include <string>

namespace pktffr {

// Strict reader over one JSON object: every key must be consumed before
// finish(), otherwise the object carried an unknown key.
class Fields {
public:
    Fields(const nlohmann::json& j, std::string context) : j_(j), ctx_(std::move(context))
    {
        if (!j_.is_object()) throw ConfigError(ctx_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    T req(const std::string& key)
    {
        if (!j_.contains(key)) throw ConfigError(ctx_ + ": missing key '" + key + "'");
        return get<T>(key);
    }

    template <class T>
    T opt(const std::string& key, T fallback)
    {
        if (!j_.contains(key)) return fallback;
        return get<T>(key);
    }

    const nlohmann::json& sub(const std::string& key)
    {
        if (!j_.contains(key)) throw ConfigError(ctx_ + ": missing key '" + key + "'");
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(ctx_ + ": unknown key '" + it.key() + "'");
    }

    const std::string& context() const { return ctx_; }

private:
    template <class T>
    T get(const std::string& key)
    {
        used_.insert(key);
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(ctx_ + ": bad value for '" + key + "': " + e.what());
        }
    }

    const nlohmann::json& j_;
    std::string ctx_;
    std::set<std::string> used_;
};

} // namespace pktffr
