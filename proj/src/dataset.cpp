#include "xssguard/dataset.hpp"

#include "xssguard/catalog.hpp"
#include "xssguard/error.hpp"
#include "xssguard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace xssguard {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "app_name", "permissions", "api_name", "website_name", "ip", "location",
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool needs_quotes(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

void write_field(std::ostream& out, std::string_view field) {
    if (!needs_quotes(field)) {
        out << field;
        return;
    }
    out << '"';
    for (char c : field) {
        if (c == '"') {
            out << '"';
        }
        out << c;
    }
    out << '"';
}

// RFC 4180 record reader. Returns false at clean end of input.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    std::size_t record_line() const { return record_line_; }

    bool next(std::vector<std::string>& fields) {
        fields.clear();
        int c = in_.get();
        if (c == EOF) {
            return false;
        }
        record_line_ = line_;
        std::string field;
        bool quoted = false;
        bool after_quote = false;
        while (true) {
            if (c == EOF) {
                if (quoted) {
                    throw ParseError("unterminated quoted field", record_line_);
                }
                fields.push_back(std::move(field));
                return true;
            }
            const char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        in_.get();
                        field += '"';
                    } else {
                        quoted = false;
                        after_quote = true;
                    }
                } else {
                    if (ch == '\n') {
                        ++line_;
                    }
                    field += ch;
                }
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
                after_quote = false;
            } else if (ch == '\n' || ch == '\r') {
                if (ch == '\r' && in_.peek() == '\n') {
                    in_.get();
                }
                ++line_;
                fields.push_back(std::move(field));
                return true;
            } else if (ch == '"' && field.empty() && !after_quote) {
                quoted = true;
            } else if (after_quote) {
                throw ParseError("unexpected character after closing quote", record_line_);
            } else {
                field += ch;
            }
            c = in_.get();
        }
    }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 1;
};

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    while (true) {
        const auto comma = value.find(',');
        const auto item = trim(value.substr(0, comma));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        value.remove_prefix(comma + 1);
    }
    return out;
}

const std::string& pick(Rng& rng, const std::vector<std::string>& pool) {
    return pool[rng.index(pool.size())];
}

// Draw from the label-leaning half with probability `weight`, otherwise
// uniformly from the whole pool. The first half of a pool leans attack.
const std::string& pick_weighted(Rng& rng, const std::vector<std::string>& pool, double weight, Label label) {
    const std::size_t half = (pool.size() + 1) / 2;
    if (pool.size() >= 2 && rng.bernoulli(weight)) {
        if (label == Label::Yes) {
            return pool[rng.index(half)];
        }
        return pool[half + rng.index(pool.size() - half)];
    }
    return pick(rng, pool);
}

void require_size(const std::vector<std::string>& pool, std::size_t minimum, std::string_view key) {
    if (pool.size() < minimum) {
        throw ConfigError("generator vocab: '" + std::string(key) + "' needs at least " +
                          std::to_string(minimum) + " entries, has " + std::to_string(pool.size()));
    }
    std::set<std::string_view> seen;
    for (const auto& v : pool) {
        if (v.empty()) {
            throw ConfigError("generator vocab: '" + std::string(key) + "' has an empty entry");
        }
        if (!seen.insert(v).second) {
            throw ConfigError("generator vocab: '" + std::string(key) + "' repeats '" + v + "'");
        }
    }
}

} // namespace

std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::optional<Feature> parse_feature(std::string_view name) {
    for (auto f : kFeatures) {
        if (feature_name(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

std::string_view label_name(Label label) { return label == Label::Yes ? "Yes" : "No"; }

std::optional<Label> parse_label(std::string_view token) {
    if (token == "Yes") {
        return Label::Yes;
    }
    if (token == "No") {
        return Label::No;
    }
    return std::nullopt;
}

std::size_t Dataset::count(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [label](const Sample& s) { return s.label == label; }));
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.seed = seed;
    out.provenance = provenance;
    out.samples.reserve(indices.size());
    for (auto i : indices) {
        out.samples.push_back(samples.at(i));
    }
    return out;
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& s : dataset.samples) {
        for (auto f : kFeatures) {
            write_field(out, s.value(f));
            out << ',';
        }
        out << label_name(s.label) << '\n';
    }
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    write_csv(dataset, out);
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

Dataset read_csv(std::istream& in) {
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) {
        throw ParseError("empty file, expected header", 1);
    }

    constexpr std::size_t kLabelColumn = kFeatureCount;
    // column position -> slot (0..5 features, 6 label)
    std::vector<std::size_t> slot_of(fields.size());
    std::array<bool, kFeatureCount + 1> present{};
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = trim(fields[i]);
        std::size_t slot;
        if (name == "label") {
            slot = kLabelColumn;
        } else if (auto f = parse_feature(name)) {
            slot = static_cast<std::size_t>(*f);
        } else {
            throw ParseError("unknown column '" + std::string(name) + "'", 1);
        }
        if (present[slot]) {
            throw ParseError("repeated column '" + std::string(name) + "'", 1);
        }
        present[slot] = true;
        slot_of[i] = slot;
    }
    for (std::size_t slot = 0; slot <= kFeatureCount; ++slot) {
        if (!present[slot]) {
            const std::string name =
                slot == kLabelColumn ? "label" : std::string(feature_name(static_cast<Feature>(slot)));
            throw ParseError("missing column '" + name + "'", 1);
        }
    }

    Dataset ds;
    ds.provenance = Provenance::Loaded;
    while (reader.next(fields)) {
        const auto line = reader.record_line();
        if (fields.size() == 1 && fields[0].empty()) {
            continue;  // blank line
        }
        if (fields.size() != slot_of.size()) {
            throw ParseError("expected " + std::to_string(slot_of.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line);
        }
        Sample s;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto slot = slot_of[i];
            if (fields[i].empty()) {
                const std::string name =
                    slot == kLabelColumn ? "label" : std::string(feature_name(static_cast<Feature>(slot)));
                throw ParseError("empty field '" + name + "'", line);
            }
            if (slot == kLabelColumn) {
                auto label = parse_label(fields[i]);
                if (!label) {
                    throw ParseError("bad label token '" + fields[i] + "' (expected Yes or No)", line);
                }
                s.label = *label;
            } else {
                s.values[slot] = std::move(fields[i]);
            }
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return read_csv(in);
}

GeneratorVocab GeneratorVocab::defaults() {
    GeneratorVocab v;
    v.app_names = {
        "NewsHub",   "ShopEasy",  "TravelMate", "FitTrack",  "RecipeBox",
        "BankLite",  "ChatNow",   "PhotoFeed",  "MusicWave", "WeatherPro",
        "CityGuide", "EduLearn",  "GameZone",   "HealthPlus", "JobFinder",
        "MovieTime", "NoteKeeper", "RideShare", "SportsLive", "WalletGo",
    };
    // One host per recorded live-attack pattern.
    v.attack_sites = {
        "stored-xss.adsrv-cdn.net",     "reflect.promo-click.biz",   "dom-inject.freegift.top",
        "iframe-hijack.coupon-hub.info", "bridge-probe.apkmirror.cc", "jsonp-steal.trk-pixel.ru",
        "onload-xss.quizprize.win",     "svg-payload.memeshare.xyz", "cookie-grab.loginhelp.co",
        "sms-relay.smsfree.pw",         "geo-leak.locate-me.su",     "acct-dump.socialboost.cn",
        "imei-harvest.devstats.io",     "history-scrape.bookmark.tk", "token-peek.oauth-fast.ml",
        "cert-sniff.securecheck.ga",    "contacts-pull.addrsync.cf",
    };
    v.benign_sites = {
        "www.wikipedia.org",  "news.bbc.co.uk",     "docs.python.org",  "www.weather.gov",
        "maps.openstreetmap.org", "www.khanacademy.org", "github.com",     "www.nasa.gov",
        "www.gutenberg.org",  "stackoverflow.com",  "www.who.int",      "developer.android.com",
        "www.mozilla.org",    "www.reuters.com",    "www.imdb.com",
    };
    v.sensitive_apis = SensitiveApiCatalog::builtin().names();
    v.benign_apis = {
        "toString",      "hashCode",        "log",            "showToast",       "getAppVersion",
        "setTitle",      "getTitle",        "openUrl",        "share",           "vibrate",
        "getTimeZone",   "getLocale",       "getScreenWidth", "getScreenHeight", "isOnline",
        "getBatteryLevel", "playSound",     "stopSound",      "setVolume",       "getVolume",
        "showDialog",    "dismissDialog",   "reload",         "goBack",          "goForward",
        "getTheme",      "setTheme",        "trackEvent",     "getConfig",       "setPreference",
        "getPreference", "formatDate",      "parseJson",      "encodeUri",       "decodeUri",
        "copyText",      "closeWindow",     "resize",         "scrollTo",        "ping",
    };
    for (int i = 0; i < 10; ++i) {
        v.ips.push_back("203.0.113." + std::to_string(11 + 7 * i));
        v.ips.push_back("198.51.100." + std::to_string(20 + 9 * i));
        v.ips.push_back("192.0.2." + std::to_string(5 + 13 * i));
    }
    v.locations = {"RU", "CN", "KP", "IR", "NG", "BR", "US", "DE", "GB", "FR", "KR", "PK"};
    // First half lean toward attacks: device, SMS, location and account access.
    v.permission_profiles = {
        "INTERNET|READ_PHONE_STATE",
        "INTERNET|READ_SMS|SEND_SMS",
        "ACCESS_FINE_LOCATION|INTERNET",
        "GET_ACCOUNTS|INTERNET|USE_CREDENTIALS",
        "INTERNET|READ_CONTACTS|READ_HISTORY_BOOKMARKS",
        "INTERNET",
        "ACCESS_NETWORK_STATE|INTERNET",
        "ACCESS_WIFI_STATE|INTERNET|WAKE_LOCK",
        "CAMERA|INTERNET|RECORD_AUDIO",
        "INTERNET|VIBRATE",
    };
    return v;
}

GeneratorVocab GeneratorVocab::load(std::istream& in) {
    GeneratorVocab v = defaults();
    const std::map<std::string_view, std::vector<std::string>*> lists = {
        {"app_names", &v.app_names},         {"attack_sites", &v.attack_sites},
        {"benign_sites", &v.benign_sites},   {"sensitive_apis", &v.sensitive_apis},
        {"benign_apis", &v.benign_apis},     {"ips", &v.ips},
        {"locations", &v.locations},         {"permission_profiles", &v.permission_profiles},
    };
    const std::map<std::string_view, double*> weights = {
        {"weight.app_name", &v.weights.app_name},
        {"weight.permissions", &v.weights.permissions},
        {"weight.website_name", &v.weights.website_name},
        {"weight.ip", &v.weights.ip},
        {"weight.location", &v.weights.location},
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected 'key = value'", line_no);
        }
        const auto key = trim(view.substr(0, eq));
        const auto value = trim(view.substr(eq + 1));
        if (auto it = lists.find(key); it != lists.end()) {
            *it->second = split_list(value);
        } else if (auto wt = weights.find(key); wt != weights.end()) {
            std::istringstream ss{std::string(value)};
            double w;
            if (!(ss >> w) || !ss.eof()) {
                throw ParseError("weight '" + std::string(key) + "' is not a number", line_no);
            }
            *wt->second = w;
        } else {
            throw ParseError("unknown vocab key '" + std::string(key) + "'", line_no);
        }
    }
    return v;
}

GeneratorVocab GeneratorVocab::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open vocab file " + path.string());
    }
    return load(in);
}

void GeneratorVocab::validate() const {
    require_size(app_names, 20, "app_names");
    require_size(attack_sites, 17, "attack_sites");
    require_size(benign_sites, 1, "benign_sites");
    require_size(sensitive_apis, 1, "sensitive_apis");
    require_size(benign_apis, 1, "benign_apis");
    require_size(ips, 1, "ips");
    require_size(locations, 1, "locations");
    require_size(permission_profiles, 1, "permission_profiles");

    for (const auto& api : benign_apis) {
        if (std::find(sensitive_apis.begin(), sensitive_apis.end(), api) != sensitive_apis.end()) {
            throw ConfigError("generator vocab: '" + api + "' is in both API pools");
        }
    }
    for (const auto& site : benign_sites) {
        if (std::find(attack_sites.begin(), attack_sites.end(), site) != attack_sites.end()) {
            throw ConfigError("generator vocab: '" + site + "' is in both site pools");
        }
    }
    for (const auto& ip : ips) {
        if (!is_dotted_quad(ip)) {
            throw ConfigError("generator vocab: ip '" + ip + "' is not a dotted quad");
        }
    }
    for (const auto& profile : permission_profiles) {
        const auto tokens = split_permissions(profile);
        for (const auto& t : tokens) {
            if (!is_known_permission(t)) {
                throw ConfigError("generator vocab: unknown permission '" + t + "'");
            }
        }
        if (tokens.empty() || canonical_permissions(tokens) != profile) {
            throw ConfigError("generator vocab: permission profile '" + profile + "' is not canonical");
        }
    }
    for (double w : {weights.app_name, weights.permissions, weights.website_name, weights.ip, weights.location}) {
        if (!(w >= 0.0 && w <= 1.0)) {
            throw ConfigError("generator vocab: weights must lie in [0, 1]");
        }
    }
}

std::size_t expected_attacks(std::size_t n, double attack_ratio) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * attack_ratio));
}

std::size_t noise_flips_per_class(std::size_t n, double attack_ratio, double noise) {
    const auto yes = expected_attacks(n, attack_ratio);
    const auto want = static_cast<std::size_t>(std::llround(noise * static_cast<double>(n) / 2.0));
    return std::min({want, yes, n - yes});
}

Dataset generate(const GeneratorParams& params, const GeneratorVocab& vocab) {
    if (!(params.attack_ratio >= 0.0 && params.attack_ratio <= 1.0)) {
        throw ConfigError("attack_ratio must lie in [0, 1]");
    }
    if (!(params.noise >= 0.0 && params.noise <= 0.5)) {
        throw ConfigError("noise must lie in [0, 0.5]");
    }
    vocab.validate();

    const Rng root(params.seed);
    const std::size_t n = params.n;
    const std::size_t yes = expected_attacks(n, params.attack_ratio);

    std::vector<Label> labels(n, Label::No);
    std::fill_n(labels.begin(), yes, Label::Yes);
    Rng label_rng = root.split("labels");
    label_rng.shuffle(std::span(labels));

    std::vector<std::string> sites = vocab.attack_sites;
    sites.insert(sites.end(), vocab.benign_sites.begin(), vocab.benign_sites.end());

    Dataset ds;
    ds.seed = params.seed;
    ds.provenance = Provenance::Generated;
    ds.samples.reserve(n);
    Rng draw = root.split("samples");
    const auto& w = vocab.weights;
    for (std::size_t i = 0; i < n; ++i) {
        const Label label = labels[i];
        Sample s;
        s.label = label;
        s.value(Feature::ApiName) = pick(draw, label == Label::Yes ? vocab.sensitive_apis : vocab.benign_apis);
        s.value(Feature::AppName) = pick_weighted(draw, vocab.app_names, w.app_name, label);
        s.value(Feature::Permissions) = pick_weighted(draw, vocab.permission_profiles, w.permissions, label);
        if (draw.bernoulli(w.website_name)) {
            s.value(Feature::WebsiteName) = pick(draw, label == Label::Yes ? vocab.attack_sites : vocab.benign_sites);
        } else {
            s.value(Feature::WebsiteName) = pick(draw, sites);
        }
        s.value(Feature::Ip) = pick_weighted(draw, vocab.ips, w.ip, label);
        s.value(Feature::Location) = pick_weighted(draw, vocab.locations, w.location, label);
        ds.samples.push_back(std::move(s));
    }

    // Flip the same number of labels in each direction after drawing, so the
    // API is predictive but not separating and the balance stays exact.
    const std::size_t flips = noise_flips_per_class(n, params.attack_ratio, params.noise);
    if (flips > 0) {
        std::vector<std::size_t> yes_rows, no_rows;
        for (std::size_t i = 0; i < n; ++i) {
            (labels[i] == Label::Yes ? yes_rows : no_rows).push_back(i);
        }
        Rng noise_rng = root.split("noise");
        noise_rng.shuffle(std::span(yes_rows));
        noise_rng.shuffle(std::span(no_rows));
        for (std::size_t j = 0; j < flips; ++j) {
            ds.samples[yes_rows[j]].label = Label::No;
            ds.samples[no_rows[j]].label = Label::Yes;
        }
    }
    return ds;
}

} // namespace xssguard
