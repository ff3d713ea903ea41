#include "xssguard/catalog.hpp"
#include "xssguard/dataset.hpp"
#include "xssguard/encoder.hpp"
#include "xssguard/error.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace xssguard;
using testing_support::row;

namespace {

std::string csv_of(const Dataset& ds) {
    std::ostringstream out;
    write_csv(ds, out);
    return out.str();
}

std::size_t parse_error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        read_csv(in);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

} // namespace

TEST(Generator, DefaultsGiveBalancedFourHundredSixty) {
    const Dataset ds = generate(GeneratorParams{});
    EXPECT_EQ(ds.size(), 460u);
    EXPECT_EQ(ds.count(Label::Yes), 230u);
    EXPECT_EQ(ds.count(Label::No), 230u);
    EXPECT_EQ(ds.seed, 42u);
    EXPECT_EQ(ds.provenance, Provenance::Generated);
}

TEST(Generator, ZeroRowsGiveEmptyDataset) {
    GeneratorParams p;
    p.n = 0;
    EXPECT_TRUE(generate(p).empty());
}

TEST(Generator, WithoutNoiseApiFamilyMatchesLabel) {
    GeneratorParams p;
    p.noise = 0.0;
    const auto& catalog = SensitiveApiCatalog::builtin();
    for (const auto& s : generate(p).samples) {
        EXPECT_EQ(catalog.is_sensitive(s.value(Feature::ApiName)), s.label == Label::Yes);
    }
}

TEST(Generator, NoiseFlipsTheSameCountEachWay) {
    const GeneratorParams p;
    const std::size_t m = noise_flips_per_class(p.n, p.attack_ratio, p.noise);
    EXPECT_EQ(m, 12u);
    const auto& catalog = SensitiveApiCatalog::builtin();
    std::size_t yes_benign = 0;
    std::size_t no_sensitive = 0;
    for (const auto& s : generate(p).samples) {
        const bool sensitive = catalog.is_sensitive(s.value(Feature::ApiName));
        yes_benign += s.label == Label::Yes && !sensitive;
        no_sensitive += s.label == Label::No && sensitive;
    }
    EXPECT_EQ(yes_benign, m);
    EXPECT_EQ(no_sensitive, m);
}

TEST(Generator, SameSeedSameRowsDifferentSeedDifferentRows) {
    GeneratorParams p;
    EXPECT_EQ(csv_of(generate(p)), csv_of(generate(p)));
    p.seed = 7;
    EXPECT_NE(csv_of(generate(p)), csv_of(generate(GeneratorParams{})));
}

TEST(Generator, ExpectedAttacksRoundsHalfAway) {
    EXPECT_EQ(expected_attacks(460, 0.5), 230u);
    EXPECT_EQ(expected_attacks(5, 0.5), 3u);
    EXPECT_EQ(expected_attacks(10, 0.0), 0u);
    EXPECT_EQ(expected_attacks(10, 1.0), 10u);
}

TEST(Generator, RejectsOutOfRangeParameters) {
    GeneratorParams p;
    p.attack_ratio = 1.5;
    EXPECT_THROW(generate(p), ConfigError);
    p = {};
    p.noise = 0.75;
    EXPECT_THROW(generate(p), ConfigError);
}

TEST(Generator, ValuesComeFromVocabulary) {
    const auto vocab = GeneratorVocab::defaults();
    const std::set<std::string> apps(vocab.app_names.begin(), vocab.app_names.end());
    const std::set<std::string> ips(vocab.ips.begin(), vocab.ips.end());
    for (const auto& s : generate(GeneratorParams{}).samples) {
        EXPECT_TRUE(apps.contains(s.value(Feature::AppName)));
        EXPECT_TRUE(ips.contains(s.value(Feature::Ip)));
    }
}

TEST(GeneratorVocab, DefaultsValidate) { EXPECT_NO_THROW(GeneratorVocab::defaults().validate()); }

TEST(GeneratorVocab, LoadOverridesKeysAndWeights) {
    std::istringstream in("# test\nlocations = US, DE, FR, GB, JP, CN, IN, BR, RU, IR, NG, KR\nweight.ip = 0.5\n");
    const auto v = GeneratorVocab::load(in);
    EXPECT_EQ(v.locations.front(), "US");
    EXPECT_DOUBLE_EQ(v.weights.ip, 0.5);
    EXPECT_NO_THROW(v.validate());
}

TEST(GeneratorVocab, UnknownKeyReportsLine) {
    std::istringstream in("\nbogus = 1\n");
    try {
        GeneratorVocab::load(in);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(GeneratorVocab, OverlappingPoolsRejected) {
    auto v = GeneratorVocab::defaults();
    v.benign_sites.push_back(v.attack_sites.front());
    EXPECT_THROW(v.validate(), ConfigError);
}

TEST(Csv, RoundTripsGeneratedData) {
    const Dataset ds = generate(GeneratorParams{});
    const std::string text = csv_of(ds);
    std::istringstream in(text);
    const Dataset back = read_csv(in);
    EXPECT_EQ(back, ds);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 461);
    EXPECT_EQ(text.substr(0, text.find('\n')), "app_name,permissions,api_name,website_name,ip,location,label");
}

TEST(Csv, QuotesFieldsThatNeedIt) {
    const Dataset ds = testing_support::dataset(
        {row("A, Inc", "INTERNET", "say \"hi\"", "x.org", "1.2.3.4", "US", Label::Yes)});
    const std::string text = csv_of(ds);
    EXPECT_NE(text.find("\"A, Inc\""), std::string::npos);
    EXPECT_NE(text.find("\"say \"\"hi\"\"\""), std::string::npos);
    std::istringstream in(text);
    EXPECT_EQ(read_csv(in), ds);
}

TEST(Csv, AcceptsColumnsInAnyOrder) {
    std::istringstream in("label,location,ip,website_name,api_name,permissions,app_name\n"
                          "No,US,1.2.3.4,x.org,vibrate,INTERNET,App\n");
    const Dataset ds = read_csv(in);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds.samples[0].value(Feature::AppName), "App");
    EXPECT_EQ(ds.samples[0].label, Label::No);
}

TEST(Csv, ErrorsCarryLineNumbers) {
    const std::string header = "app_name,permissions,api_name,website_name,ip,location,label\n";
    EXPECT_EQ(parse_error_line(""), 1u);
    EXPECT_EQ(parse_error_line("app_name,permissions\n"), 1u);
    EXPECT_EQ(parse_error_line(header + "A,P,api,s,1.2.3.4,US,Yes\nA,P,api,s,1.2.3.4,US,Maybe\n"), 3u);
    EXPECT_EQ(parse_error_line(header + "A,P,api,s,1.2.3.4,US\n"), 2u);
    EXPECT_EQ(parse_error_line(header + "A,,api,s,1.2.3.4,US,No\n"), 2u);
    EXPECT_EQ(parse_error_line(header + "A,P,\"open,s,1.2.3.4,US,No\n"), 2u);
    EXPECT_EQ(parse_error_line("app_name,app_name,permissions,api_name,website_name,ip,location,label\n"), 1u);
}

TEST(Encoder, WidthIsCategoriesPlusOneUnseenPerFeature) {
    const Dataset ds = testing_support::dataset({
        row("A", "INTERNET", "x", "s1", "1.1.1.1", "US", Label::Yes),
        row("B", "INTERNET", "y", "s1", "1.1.1.2", "US", Label::No),
        row("A", "INTERNET", "z", "s2", "1.1.1.1", "DE", Label::No),
    });
    const Encoder enc = Encoder::fit(ds);
    // apps 2, perms 1, apis 3, sites 2, ips 2, locations 2, plus six unseen columns
    EXPECT_EQ(enc.width(), 12u + 6u);
    const auto row0 = enc.encode_row(ds.samples[0]);
    EXPECT_DOUBLE_EQ(std::accumulate(row0.begin(), row0.end(), 0.0), 6.0);
}

TEST(Encoder, UnseenCategoryMapsToReservedColumn) {
    const Dataset ds = testing_support::dataset({
        row("A", "INTERNET", "x", "s1", "1.1.1.1", "US", Label::Yes),
        row("B", "INTERNET", "y", "s1", "1.1.1.2", "US", Label::No),
    });
    const Encoder enc = Encoder::fit(ds);
    EXPECT_EQ(enc.column(Feature::ApiName, "never"), enc.unseen_column(Feature::ApiName));
    EXPECT_NE(enc.column(Feature::ApiName, "x"), enc.unseen_column(Feature::ApiName));
    const auto cols = enc.active_columns(row("Q", "INTERNET", "x", "s1", "9.9.9.9", "US", Label::No));
    EXPECT_EQ(cols[static_cast<std::size_t>(Feature::AppName)], enc.unseen_column(Feature::AppName));
}

TEST(Encoder, EmptyDatasetRejected) { EXPECT_THROW(Encoder::fit(Dataset{}), DomainError); }
