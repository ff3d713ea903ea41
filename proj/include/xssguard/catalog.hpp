#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xssguard {

/// One attempted Java-object registration through the WebView bridge.
///
/// `permissions` is kept in canonical form: sorted, de-duplicated tokens
/// joined by '|'. Use canonical_permissions() when building from a list.
struct BridgeEvent {
    std::string event_id;
    std::string app_name;
    std::string object_name;
    std::string website_name;
    std::string ip;
    std::string location;
    std::string permissions;
    std::vector<std::string> requested_apis;
    std::int64_t timestamp = 0;

    bool operator==(const BridgeEvent&) const = default;
};

/// Names of the Android permissions an event may carry.
const std::vector<std::string>& permission_vocabulary();
bool is_known_permission(std::string_view token);

std::string canonical_permissions(std::span<const std::string> tokens);
std::vector<std::string> split_permissions(std::string_view joined);

bool is_dotted_quad(std::string_view ip);

/// Throws DomainError naming the first violated invariant.
void validate(const BridgeEvent& event);

/// Set of native APIs that expose device data to page script.
///
/// Lookups are exact and case-sensitive. Corrected spellings of a few catalog
/// names resolve through an alias table to the canonical (original) string.
class SensitiveApiCatalog {
public:
    SensitiveApiCatalog(std::vector<std::string> names, std::string version,
                        std::map<std::string, std::string, std::less<>> aliases = {});

    /// The compiled-in 35-entry table.
    static const SensitiveApiCatalog& builtin();

    /// One name per line; blank lines and `#` comments ignored. The builtin
    /// alias table is kept for every canonical name the file also lists.
    static SensitiveApiCatalog load(std::istream& in, std::string version = "file");
    static SensitiveApiCatalog load(const std::filesystem::path& path);

    bool is_sensitive(std::string_view api) const;

    /// Canonical catalog spelling for `api`, following aliases.
    std::optional<std::string> canonical(std::string_view api) const;

    /// `apis` restricted to catalog members, first-occurrence order, no duplicates.
    std::vector<std::string> sensitive_subset(std::span<const std::string> apis) const;
    std::vector<std::string> sensitive_subset(const BridgeEvent& event) const {
        return sensitive_subset(event.requested_apis);
    }

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::map<std::string, std::string, std::less<>>& aliases() const noexcept { return aliases_; }
    const std::string& version() const noexcept { return version_; }
    std::size_t size() const noexcept { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::set<std::string, std::less<>> lookup_;
    std::map<std::string, std::string, std::less<>> aliases_;
    std::string version_;
};

} // namespace xssguard
