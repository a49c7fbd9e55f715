#include <gtest/gtest.h>
#include <json.hpp>

#include "segroute/error.hpp"
#include "segroute/external_model.hpp"
#include "test_support.hpp"

using namespace segroute;
using segroute::testing::TempDir;

namespace {

ExternalModelSpec server(const std::string& mode, std::vector<std::string> extra = {})
{
    ExternalModelSpec spec;
    spec.command = {SEGROUTE_FAKE_SERVER, "--mode", mode};
    spec.command.insert(spec.command.end(), extra.begin(), extra.end());
    spec.labels = {"MCC", "PLD"};
    spec.timeout = std::chrono::milliseconds(2000);
    return spec;
}

Volume sample()
{
    return segroute::testing::real_from({2, 2, 1}, {0.1f, 0.7f, 0.5f, 0.2f});
}

} // namespace

TEST(ExternalModel, ClassifyReturnsDeclaredScores)
{
    ExternalClassifier c(std::make_shared<ExternalModelClient>(server("ok", {"--p", "0.75"})));
    auto s = c.classify(sample());
    EXPECT_EQ(s.at("PLD"), 0.75);
    EXPECT_EQ(s.at("MCC"), 0.25);
    // The process is reused across calls.
    EXPECT_EQ(c.classify(sample()).argmax(), "PLD");
}

TEST(ExternalModel, SegmentRoundTripsThroughFiles)
{
    ExternalSegmenter s(std::make_shared<ExternalModelClient>(server("ok")));
    auto m = s.segment(sample());
    EXPECT_EQ(m, segroute::testing::mask_from({2, 2, 1}, {0, 1, 1, 0}));
}

TEST(ExternalModel, RequestTranscript)
{
    TempDir dir;
    auto log = dir / "transcript.jsonl";
    auto spec = server("ok", {"--transcript", log.string()});
    spec.scratch_directory = dir / "scratch";
    auto client = std::make_shared<ExternalModelClient>(spec);
    ExternalClassifier(client).classify(sample());
    client->shutdown();
    client->shutdown();

    std::istringstream in(segroute::testing::read_file(log));
    std::string first, second, extra;
    ASSERT_TRUE(std::getline(in, first));
    ASSERT_TRUE(std::getline(in, second));
    EXPECT_FALSE(std::getline(in, extra));
    auto request = nlohmann::json::parse(first);
    EXPECT_EQ(request.at("op"), "classify");
    std::filesystem::path volume = request.at("volume").get<std::string>();
    EXPECT_TRUE(volume.is_absolute());
    EXPECT_EQ(volume.parent_path(), std::filesystem::absolute(spec.scratch_directory));
    EXPECT_FALSE(std::filesystem::exists(volume)) << "scratch input left behind";
    EXPECT_EQ(second, R"({"op":"shutdown"})");
}

TEST(ExternalModel, ReportedErrorCarriesMessage)
{
    ExternalClassifier c(std::make_shared<ExternalModelClient>(server("fail")));
    try {
        c.classify(sample());
        FAIL() << "expected ModelReportedError";
    } catch (const ModelReportedError& e) {
        EXPECT_STREQ(e.what(), "model exploded");
    }
}

TEST(ExternalModel, ProtocolFailures)
{
    EXPECT_THROW(ExternalClassifier(std::make_shared<ExternalModelClient>(server("malformed"))).classify(sample()),
                 ProtocolError);
    EXPECT_THROW(ExternalClassifier(std::make_shared<ExternalModelClient>(server("exit"))).classify(sample()),
                 ProtocolError);
    EXPECT_THROW(ExternalClassifier(std::make_shared<ExternalModelClient>(server("bad-labels"))).classify(sample()),
                 ProtocolError);
    EXPECT_THROW(ExternalSegmenter(std::make_shared<ExternalModelClient>(server("wrong-dims"))).segment(sample()),
                 ProtocolError);
}

TEST(ExternalModel, InvalidScoresAreProtocolErrors)
{
    EXPECT_THROW(
        ExternalClassifier(std::make_shared<ExternalModelClient>(server("ok", {"--p", "1.5"}))).classify(sample()),
        ProtocolError);
}

TEST(ExternalModel, Timeout)
{
    auto spec = server("sleep");
    spec.timeout = std::chrono::milliseconds(200);
    auto client = std::make_shared<ExternalModelClient>(spec);
    auto start = std::chrono::steady_clock::now();
    EXPECT_THROW(ExternalClassifier(client).classify(sample()), ModelTimeoutError);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
}

TEST(ExternalModel, SpawnFailure)
{
    ExternalModelSpec spec;
    spec.command = {"/nonexistent/segroute-model"};
    spec.labels = {"MCC", "PLD"};
    EXPECT_THROW(ExternalClassifier(std::make_shared<ExternalModelClient>(spec)).classify(sample()), SpawnError);

    ExternalModelSpec empty;
    EXPECT_THROW(ExternalModelClient{empty}, ValidationError);
    ExternalModelSpec unlabeled = server("ok");
    unlabeled.labels.clear();
    EXPECT_THROW(ExternalClassifier{std::make_shared<ExternalModelClient>(unlabeled)}, ValidationError);
}
