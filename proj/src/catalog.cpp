#include "xssguard/catalog.hpp"

#include "xssguard/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace xssguard {

namespace {

// Table of vulnerable bridge APIs, spellings as published.
const std::vector<std::string> kBuiltinNames = {
    "getCellLocation",      "getDeviceId",          "getPhoneType",
    "getSubscriberId",      "getLine1Number",       "getSimSerialNumber",
    "getVoiceMailAlphaTag", "getVoiceMailNumber",   "SendTextMessage",
    "sendMultipleTextMessage", "sendDataMessage",   "getAllProvider",
    "getBestProvider",      "getGpsStatus",         "getLastKnownLocation",
    "clearPassword",        "editProperties",       "semdMultipartTextMessage",
    "getAccounts",          "getAuthToken",         "getUserDate",
    "peekAuthToken",        "removeAccount",        "setPassword",
    "getName",              "getProfileConnectionState", "getProfileProxy",
    "getParams",            "getUnzippedContent",   "getCertificate",
    "clearHistory",         "clearSearches",        "getAllBookMarks",
    "getAllVisitedUrls",    "getNetworkOperator",
};

// Corrected spelling -> published spelling.
const std::map<std::string, std::string, std::less<>> kBuiltinAliases = {
    {"sendMultipartTextMessage", "semdMultipartTextMessage"},
    {"sendTextMessage", "SendTextMessage"},
    {"getUserData", "getUserDate"},
    {"getAllBookmarks", "getAllBookMarks"},
    {"getAllProviders", "getAllProvider"},
};

const std::vector<std::string> kPermissions = {
    "ACCESS_COARSE_LOCATION", "ACCESS_FINE_LOCATION", "ACCESS_NETWORK_STATE",
    "ACCESS_WIFI_STATE",      "BLUETOOTH",            "CAMERA",
    "GET_ACCOUNTS",           "INTERNET",             "MANAGE_ACCOUNTS",
    "READ_CONTACTS",          "READ_EXTERNAL_STORAGE", "READ_HISTORY_BOOKMARKS",
    "READ_PHONE_STATE",       "READ_SMS",             "RECEIVE_SMS",
    "RECORD_AUDIO",           "SEND_SMS",             "USE_CREDENTIALS",
    "VIBRATE",                "WAKE_LOCK",            "WRITE_CONTACTS",
    "WRITE_EXTERNAL_STORAGE", "WRITE_HISTORY_BOOKMARKS",
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

} // namespace

const std::vector<std::string>& permission_vocabulary() { return kPermissions; }

bool is_known_permission(std::string_view token) {
    return std::binary_search(kPermissions.begin(), kPermissions.end(), token);
}

std::string canonical_permissions(std::span<const std::string> tokens) {
    std::vector<std::string> sorted(tokens.begin(), tokens.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::string out;
    for (const auto& t : sorted) {
        if (!out.empty()) {
            out += '|';
        }
        out += t;
    }
    return out;
}

std::vector<std::string> split_permissions(std::string_view joined) {
    std::vector<std::string> out;
    while (!joined.empty()) {
        const auto bar = joined.find('|');
        const auto token = joined.substr(0, bar);
        if (!token.empty()) {
            out.emplace_back(token);
        }
        if (bar == std::string_view::npos) {
            break;
        }
        joined.remove_prefix(bar + 1);
    }
    return out;
}

bool is_dotted_quad(std::string_view ip) {
    int parts = 0;
    while (true) {
        const auto dot = ip.find('.');
        const auto part = ip.substr(0, dot);
        if (part.empty() || part.size() > 3) {
            return false;
        }
        unsigned value = 0;
        const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (ec != std::errc{} || end != part.data() + part.size() || value > 255) {
            return false;
        }
        ++parts;
        if (dot == std::string_view::npos) {
            break;
        }
        ip.remove_prefix(dot + 1);
    }
    return parts == 4;
}

void validate(const BridgeEvent& event) {
    if (event.requested_apis.empty()) {
        throw DomainError("event " + event.event_id + ": requested_apis is empty");
    }
    if (!is_dotted_quad(event.ip)) {
        throw DomainError("event " + event.event_id + ": ip '" + event.ip + "' is not a dotted quad");
    }
    const auto tokens = split_permissions(event.permissions);
    for (const auto& t : tokens) {
        if (!is_known_permission(t)) {
            throw DomainError("event " + event.event_id + ": unknown permission '" + t + "'");
        }
    }
    if (canonical_permissions(tokens) != event.permissions) {
        throw DomainError("event " + event.event_id + ": permissions not in canonical sorted form");
    }
}

SensitiveApiCatalog::SensitiveApiCatalog(std::vector<std::string> names, std::string version,
                                         std::map<std::string, std::string, std::less<>> aliases)
    : names_(std::move(names)), version_(std::move(version)) {
    for (const auto& n : names_) {
        if (n.empty()) {
            throw ConfigError("catalog: empty API name");
        }
        if (!lookup_.insert(n).second) {
            throw ConfigError("catalog: duplicate API name '" + n + "'");
        }
    }
    for (auto& [alias, target] : aliases) {
        if (lookup_.contains(target) && !lookup_.contains(alias)) {
            aliases_.emplace(alias, target);
        }
    }
}

const SensitiveApiCatalog& SensitiveApiCatalog::builtin() {
    static const SensitiveApiCatalog catalog(kBuiltinNames, "builtin-1", kBuiltinAliases);
    return catalog;
}

SensitiveApiCatalog SensitiveApiCatalog::load(std::istream& in, std::string version) {
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (!view.empty()) {
            names.emplace_back(view);
        }
    }
    return SensitiveApiCatalog(std::move(names), std::move(version), kBuiltinAliases);
}

SensitiveApiCatalog SensitiveApiCatalog::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open catalog file " + path.string());
    }
    return load(in, path.filename().string());
}

bool SensitiveApiCatalog::is_sensitive(std::string_view api) const {
    return lookup_.contains(api) || aliases_.contains(api);
}

std::optional<std::string> SensitiveApiCatalog::canonical(std::string_view api) const {
    if (auto it = lookup_.find(api); it != lookup_.end()) {
        return *it;
    }
    if (auto it = aliases_.find(api); it != aliases_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::vector<std::string> SensitiveApiCatalog::sensitive_subset(std::span<const std::string> apis) const {
    std::vector<std::string> out;
    for (const auto& api : apis) {
        if (is_sensitive(api) && std::find(out.begin(), out.end(), api) == out.end()) {
            out.push_back(api);
        }
    }
    return out;
}

} // namespace xssguard
