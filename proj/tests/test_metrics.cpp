#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <procflow/metrics.hpp>

namespace pf = procflow;

static pf::LabelSpace space_of(std::vector<std::string> names) {
    pf::LabelSpace space;
    space.classes = std::move(names);
    return space;
}

TEST_CASE("confusion matrix counts true rows against predicted columns",
          "[metrics]") {
    const std::vector<std::size_t> preds = {0, 1, 1};
    const std::vector<std::size_t> labels = {0, 1, 0};
    auto cm = pf::confusion_matrix(preds, labels, space_of({"a", "b"}));

    REQUIRE(cm.size() == 2);
    CHECK(cm.counts[0] == std::vector<std::size_t>{1, 1});
    CHECK(cm.counts[1] == std::vector<std::size_t>{0, 1});
    CHECK(cm.total() == 3);
    CHECK(cm.trace() == 2);

    SECTION("row sums equal class supports") {
        std::size_t support_a = cm.counts[0][0] + cm.counts[0][1];
        CHECK(support_a == 2);
    }
    SECTION("the count overload invents class names") {
        auto anon = pf::confusion_matrix(preds, labels, std::size_t{2});
        CHECK(anon.class_names.classes ==
              std::vector<std::string>{"class_0", "class_1"});
        CHECK(anon.counts == cm.counts);
    }
    SECTION("length mismatch and out-of-range indices are rejected") {
        CHECK_THROWS_AS(pf::confusion_matrix(std::vector<std::size_t>{0},
                                             labels, space_of({"a", "b"})),
                        pf::Error);
        CHECK_THROWS_AS(pf::confusion_matrix(std::vector<std::size_t>{0, 2, 1},
                                             labels, space_of({"a", "b"})),
                        pf::Error);
    }
}

TEST_CASE("report carries accuracy and unweighted macro averages", "[metrics]") {
    // true a: 5 right, 5 predicted b; true b: all 10 right
    pf::ConfusionMatrix cm;
    cm.class_names = space_of({"a", "b"});
    cm.counts = {{5, 5}, {0, 10}};
    auto report = pf::report_from_confusion(cm);

    CHECK(report.accuracy == Catch::Approx(0.75).margin(1e-15));
    CHECK(report.macro_precision ==
          Catch::Approx((1.0 + 10.0 / 15.0) / 2.0).margin(1e-15));
    CHECK(report.macro_recall == Catch::Approx((0.5 + 1.0) / 2.0).margin(1e-15));

    REQUIRE(report.per_class.size() == 2);
    CHECK(report.per_class[0].name == "a");
    CHECK(report.per_class[0].support == 10);
    CHECK(report.per_class[0].precision == 1.0);
    CHECK(report.per_class[0].recall == 0.5);
    CHECK(report.per_class[1].support == 10);

    std::size_t support_sum = 0;
    for (const auto &m : report.per_class) support_sum += m.support;
    CHECK(support_sum == report.confusion.total());
    CHECK(report.accuracy ==
          static_cast<double>(report.confusion.trace()) /
              static_cast<double>(report.confusion.total()));
}

TEST_CASE("absent classes contribute zeros to the macro averages", "[metrics]") {
    // class c exists in the space but never appears in labels or predictions
    const std::vector<std::size_t> preds = {0, 1, 0, 1};
    const std::vector<std::size_t> labels = {0, 1, 0, 1};
    auto report =
        pf::evaluate_predictions(preds, labels, space_of({"a", "b", "c"}));

    CHECK(report.accuracy == 1.0);
    CHECK(report.per_class[2].support == 0);
    CHECK(report.per_class[2].precision == 0.0);
    CHECK(report.per_class[2].recall == 0.0);
    CHECK(report.macro_precision == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(report.macro_recall == Catch::Approx(2.0 / 3.0).margin(1e-15));
}

TEST_CASE("macro recall equals accuracy when supports balance", "[metrics]") {
    pf::Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng.below(5);
        const std::size_t per_class = 1 + rng.below(40);
        std::vector<std::size_t> labels, preds;
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t i = 0; i < per_class; ++i) {
                labels.push_back(c);
                preds.push_back(rng.below(k));
            }
        pf::LabelSpace space;
        for (std::size_t c = 0; c < k; ++c)
            space.classes.push_back("c" + std::to_string(c));
        auto report = pf::evaluate_predictions(preds, labels, space);
        CHECK(std::abs(report.macro_recall - report.accuracy) <= 1e-12);
    }
}

TEST_CASE("empty evaluations are rejected", "[metrics]") {
    pf::ConfusionMatrix cm;
    cm.class_names = space_of({"a"});
    cm.counts = {{0}};
    try {
        pf::report_from_confusion(cm);
        FAIL("expected a validation error");
    } catch (const pf::Error &err) {
        CHECK(err.category() == pf::ErrorCategory::validation);
    }
}

TEST_CASE("report JSON carries the full structure", "[metrics]") {
    pf::ConfusionMatrix cm;
    cm.class_names = space_of({"a", "b"});
    cm.counts = {{5, 5}, {0, 10}};
    auto j = pf::report_to_json(pf::report_from_confusion(cm));

    CHECK(j.at("accuracy").get<double>() == Catch::Approx(0.75));
    CHECK(j.at("macro_precision").get<double>() ==
          Catch::Approx((1.0 + 10.0 / 15.0) / 2.0));
    CHECK(j.at("macro_recall").get<double>() == Catch::Approx(0.75));
    REQUIRE(j.at("per_class").size() == 2);
    CHECK(j["per_class"][0]["name"] == "a");
    CHECK(j["per_class"][0]["support"] == 10);
    CHECK(j["confusion"]["classes"] ==
          nlohmann::json(std::vector<std::string>{"a", "b"}));
    CHECK(j["confusion"]["has_other"] == false);
    CHECK(j["confusion"]["counts"][0][1] == 5);
}

TEST_CASE("rendered report formats percentages to two decimals", "[metrics]") {
    pf::ConfusionMatrix cm;
    cm.class_names = space_of({"a", "b"});
    cm.counts = {{5, 5}, {0, 10}};
    const std::string text = pf::render_report(pf::report_from_confusion(cm));

    CHECK(text.find("accuracy 75.00%") != std::string::npos);
    CHECK(text.find("macro precision 83.33%") != std::string::npos);
    CHECK(text.find("macro recall 75.00%") != std::string::npos);
    CHECK(text.find("100.00%") != std::string::npos);
    CHECK(text.find("50.00%") != std::string::npos);
    CHECK(text.find("class") != std::string::npos);
}

TEST_CASE("confusion CSV puts names on the first row and column", "[metrics]") {
    pf::ConfusionMatrix cm;
    cm.class_names = space_of({"a", "b"});
    cm.counts = {{1, 1}, {0, 1}};
    CHECK(pf::confusion_to_csv(cm) == "true\\predicted,a,b\na,1,1\nb,0,1\n");

    SECTION("names with commas are quoted") {
        cm.class_names = space_of({"we,ird", "b"});
        const std::string csv = pf::confusion_to_csv(cm);
        CHECK(csv.find("\"we,ird\"") != std::string::npos);
    }
}

TEST_CASE("heatmap shades each row by its share", "[metrics]") {
    pf::ConfusionMatrix cm;
    cm.class_names = space_of({"a", "b"});
    cm.counts = {{5, 5}, {0, 10}};
    CHECK(pf::render_confusion_heatmap(cm) == "==  a\n @  b\n");
}

TEST_CASE("model evaluation maps labels through the model's space",
          "[metrics]") {
    // 1-D separable data, forest trained with labels seen b-first
    pf::LabeledDataset train;
    train.features = pf::Matrix(0, 1);
    for (int i = 0; i < 20; ++i) {
        train.features.append_row(
            std::vector<double>{i < 10 ? 10.0 + i : i - 10.0});
        train.labels.push_back(i < 10 ? "hi" : "lo");
    }
    pf::ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.seed = 32;
    auto forest = pf::train_forest(train, cfg);

    // test set lists the classes in the opposite order
    pf::LabeledDataset test;
    test.features = pf::Matrix(0, 1);
    test.features.append_row(std::vector<double>{2.0});
    test.features.append_row(std::vector<double>{17.0});
    test.labels = {"lo", "hi"};

    auto report = pf::evaluate(forest, test);
    CHECK(report.accuracy == 1.0);
    CHECK(report.confusion.class_names.classes == forest.class_names.classes);

    SECTION("labels outside the model's space are rejected") {
        test.labels[0] = "mystery";
        CHECK_THROWS_AS(pf::evaluate(forest, test), pf::Error);
    }
    SECTION("empty test set is rejected") {
        pf::LabeledDataset empty;
        empty.features = pf::Matrix(0, 1);
        CHECK_THROWS_AS(pf::evaluate(forest, empty), pf::Error);
    }
}
