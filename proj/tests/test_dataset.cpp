#include <algorithm>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "mindrel/dataset.hpp"
#include "mindrel/errors.hpp"
#include "mindrel/synthetic.hpp"
#include "support.hpp"

using namespace mindrel;

namespace {

auto parse(std::string const& text, std::string const& label = "y") -> Dataset
{
    std::istringstream in(text);
    return parse_csv(in, label);
}

auto column_dataset(std::vector<double> const& values) -> Dataset
{
    Dataset d;
    d.features = Eigen::Map<Eigen::VectorXd const>(values.data(), static_cast<Eigen::Index>(values.size()));
    d.labels.assign(values.size(), 0);
    d.feature_names = { "c" };
    return d;
}

} // namespace

TEST_CASE("numeric columns pass through and labels become class ids")
{
    auto const d = parse("a,b,y\n1,2,0\n3,4,1\n5,6,0\n");
    CHECK(d.rows() == 3);
    CHECK(d.cols() == 2);
    CHECK(d.num_classes == 2);
    CHECK(d.feature_names == std::vector<std::string> { "a", "b" });
    CHECK(d.labels == std::vector<int> { 0, 1, 0 });
    CHECK(d.features(2, 1) == 6.0);
}

TEST_CASE("categorical columns are one-hot encoded in sorted level order")
{
    auto const d = parse("color,y\nred,yes\nblue,no\nred,no\n");
    REQUIRE(d.cols() == 2);
    CHECK(d.feature_names == std::vector<std::string> { "color=blue", "color=red" });
    CHECK(d.features(0, 0) == 0.0);
    CHECK(d.features(0, 1) == 1.0);
    CHECK(d.features(1, 0) == 1.0);
    CHECK(d.class_names == std::vector<std::string> { "no", "yes" });
    CHECK(d.labels == std::vector<int> { 1, 0, 0 });
}

TEST_CASE("numeric labels are ordered by value")
{
    auto const d = parse("a,y\n1,10\n2,2\n3,10\n");
    CHECK(d.class_names == std::vector<std::string> { "2", "10" });
    CHECK(d.labels == std::vector<int> { 1, 0, 1 });
}

TEST_CASE("load errors name the offending row and column")
{
    SUBCASE("absent label column")
    {
        try {
            parse("a,b\n1,2\n", "target");
            FAIL("expected an error");
        } catch (DataError const& e) {
            CHECK(e.kind() == DataErrorKind::MissingLabelColumn);
            CHECK(e.column() == "target");
            CHECK(std::string(e.what()).find("target") != std::string::npos);
        }
    }
    SUBCASE("missing file")
    {
        try {
            load_csv("/nonexistent/file.csv", "y");
            FAIL("expected an error");
        } catch (DataError const& e) {
            CHECK(e.kind() == DataErrorKind::MissingFile);
        }
    }
    SUBCASE("empty cell")
    {
        try {
            parse("a,b,y\n1,2,0\n3,,1\n");
            FAIL("expected an error");
        } catch (DataError const& e) {
            CHECK(e.kind() == DataErrorKind::MissingCell);
            CHECK(e.row() == 3);
            CHECK(e.column() == "b");
        }
    }
    SUBCASE("ragged row")
    {
        try {
            parse("a,b,y\n1,2\n");
            FAIL("expected an error");
        } catch (DataError const& e) {
            CHECK(e.kind() == DataErrorKind::RaggedRow);
            CHECK(e.row() == 2);
        }
    }
}

TEST_CASE("normalizer maps the training range onto [-1, 1]")
{
    auto const spec = fit_normalizer(column_dataset({ 0.0, 10.0 }));
    CHECK(spec.min[0] == 0.0);
    CHECK(spec.max[0] == 10.0);
    CHECK(spec.normalize(0, 5.0) == 0.0);
    CHECK(spec.normalize(0, 0.0) == -1.0);

    auto const constant = fit_normalizer(column_dataset({ 3.0, 3.0, 3.0 }));
    CHECK(constant.normalize(0, 3.0) == 0.0);
    CHECK(apply_normalizer(constant, column_dataset({ 3.0, 3.0, 3.0 })).features.cwiseAbs().maxCoeff() == 0.0);

    auto const identity = fit_normalizer(column_dataset({ -1.0, 1.0 }));
    CHECK(identity.normalize(0, 0.25) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("test values outside the training range are clipped")
{
    auto const spec = fit_normalizer(column_dataset({ 0.0, 10.0 }));
    auto const out = apply_normalizer(spec, column_dataset({ 12.0, 0.0, 5.0 }));
    CHECK(out.features(0, 0) == 1.0);
    CHECK(out.features(1, 0) == -1.0);
    CHECK(out.features(2, 0) == 0.0);
    CHECK_THROWS_AS(apply_normalizer(spec, parse("a,b,y\n1,2,0\n")), DataError);
    CHECK_THROWS_AS(fit_normalizer(Dataset {}), DataError);
}

TEST_CASE("normalize round trip on a bundled dataset")
{
    auto const raw = load_csv(support::data_dir() / "bank_like.csv", "y");
    auto const spec = fit_normalizer(raw);
    auto const d = apply_normalizer(spec, raw);
    CHECK(d.features.maxCoeff() <= 1.0);
    CHECK(d.features.minCoeff() >= -1.0);
    for (Eigen::Index c = 0; c < d.features.cols(); ++c) {
        if (spec.max[static_cast<Index>(c)] > spec.min[static_cast<Index>(c)]) {
            CHECK(d.features.col(c).minCoeff() == -1.0);
            CHECK(d.features.col(c).maxCoeff() == 1.0);
        }
    }
    CHECK(d.feature_names.size() == d.cols());
    auto const back = NormalizationSpec::from_json(spec.to_json());
    CHECK(back.names == spec.names);
    CHECK(back.min == spec.min);
    CHECK(back.max == spec.max);
}

TEST_CASE("split sizes and determinism")
{
    auto const d = make_synthetic(SyntheticKind::Linear, 10, 3, 1);
    auto const [a, b] = split(d, 0.7, 5);
    CHECK(a.rows() == 7);
    CHECK(b.rows() == 3);
    auto const [a2, b2] = split(d, 0.7, 5);
    CHECK(a.features == a2.features);
    CHECK(b.labels == b2.labels);
    CHECK_THROWS_AS(split(d, 1.0, 5), UsageError);
    CHECK_THROWS_AS(split(d, 0.0, 5), UsageError);

    // different seeds give different row orders
    auto const big = make_synthetic(SyntheticKind::Linear, 100, 2, 1);
    auto const [p1, q1] = split(big, 0.5, 1);
    auto const [p2, q2] = split(big, 0.5, 2);
    CHECK(p1.features != p2.features);
}

TEST_CASE("sample_partition")
{
    auto const none = sample_partition(5, 0, 3);
    CHECK(none.sensitive_idx.empty());
    CHECK(none.public_idx == IndexSet { 0, 1, 2, 3, 4 });
    auto const all = sample_partition(5, 5, 3);
    CHECK(all.sensitive_idx == IndexSet { 0, 1, 2, 3, 4 });
    CHECK(all.public_idx.empty());
    auto const p = sample_partition(10, 3, 7);
    auto const q = sample_partition(10, 3, 7);
    CHECK(p.sensitive_idx == q.sensitive_idx);
    CHECK_THROWS_AS(sample_partition(3, 4, 0), UsageError);

    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto const n = 1 + seed % 17;
        auto const part = sample_partition(n, seed % (n + 1), seed);
        CHECK(part.num_features() == n);
        IndexSet merged;
        std::merge(part.public_idx.begin(), part.public_idx.end(), part.sensitive_idx.begin(),
                   part.sensitive_idx.end(), std::back_inserter(merged));
        CHECK(std::adjacent_find(merged.begin(), merged.end()) == merged.end());
        CHECK(std::is_sorted(part.sensitive_idx.begin(), part.sensitive_idx.end()));
    }
}

TEST_CASE("synthetic generators are deterministic")
{
    std::ostringstream a;
    std::ostringstream b;
    write_synthetic_csv(a, SyntheticKind::BankLike, 50, 0, 9);
    write_synthetic_csv(b, SyntheticKind::BankLike, 50, 0, 9);
    CHECK(a.str() == b.str());
    auto const multi = make_synthetic(SyntheticKind::Multiclass, 300, 3, 2);
    CHECK(multi.num_classes == 3);
    CHECK_THROWS_AS(parse_synthetic_kind("spiral"), UsageError);
}
