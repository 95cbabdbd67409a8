#include <gtest/gtest.h>

#include "locaudit/error.hpp"
#include "locaudit/task_model.hpp"
#include "test_support.hpp"

using namespace locaudit;

namespace {

TaskRecord english(const std::string& id) {
    return TaskRecord{id, "en", Variant::english, 1, "How many legs does a spider have?", "8", "", id};
}

TaskRecord translated(const std::string& id, const std::string& src, const std::string& lang = "de") {
    return TaskRecord{id, lang, Variant::mt, 1, "Wie viele Beine hat eine Spinne?", "8", "", src};
}

}  // namespace

TEST(LanguageTag, PrimarySubtag) {
    EXPECT_EQ(primary_language("pt-BR"), "pt");
    EXPECT_EQ(primary_language("DE"), "de");
    EXPECT_TRUE(is_valid_language_tag("pt-BR"));
    EXPECT_TRUE(is_valid_language_tag("ko"));
    EXPECT_FALSE(is_valid_language_tag("p"));
    EXPECT_FALSE(is_valid_language_tag("de_DE"));
    EXPECT_FALSE(is_valid_language_tag(""));
}

TEST(Record, RoundTripsThroughJson) {
    auto r = translated("t1", "s1");
    r.file_name = "table.xlsx";
    r.level = 3;
    EXPECT_EQ(parse_record(serialize_record(r)), r);
}

TEST(Record, AcceptsSourceBenchmarkFieldNames) {
    const auto r = parse_record(
        R"({"task_id":"a1","language":"en","variant":"english","Level":"2","Question":"Q?","Final answer":"A"})");
    EXPECT_EQ(r.query, "Q?");
    EXPECT_EQ(r.answer, "A");
    EXPECT_EQ(r.level, 2);
    EXPECT_EQ(r.source_task_id, "a1");
    EXPECT_EQ(r.file_name, "");
}

TEST(Record, RejectsUnknownFieldsAndBadValues) {
    EXPECT_THROW(parse_record(R"({"task_id":"a","language":"en","variant":"english","level":1,"query":"q","answer":"a","extra":1})"),
                 ParseError);
    EXPECT_THROW(parse_record(R"({"task_id":"a","language":"en","variant":"english","level":1,"query":"q","answer":""})"),
                 Error);
    EXPECT_THROW(parse_record(R"({"task_id":"a","language":"en","variant":"robot","level":1,"query":"q","answer":"a"})"),
                 Error);
    EXPECT_THROW(parse_record("not json"), ParseError);
}

TEST(Record, EnglishMustBeItsOwnSource) {
    auto r = english("e1");
    r.source_task_id = "other";
    EXPECT_THROW(validate_record(r), ValidationError);
}

TEST(Dataset, ParseErrorNamesTheLine) {
    std::vector<std::string> lines{serialize_record(english("e1")), "", "{broken"};
    try {
        parse_dataset(lines);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Dataset, RejectsDuplicateTriples) {
    std::vector<std::string> lines{serialize_record(english("e1")), serialize_record(english("e1"))};
    EXPECT_THROW(parse_dataset(lines), Error);
}

TEST(Dataset, FileRoundTrip) {
    testsupport::TempDir dir;
    Dataset d;
    d.records = {english("e1"), english("e2")};
    write_dataset_file((dir / "d.jsonl").string(), d);
    EXPECT_EQ(read_dataset_file((dir / "d.jsonl").string()).records, d.records);
}

TEST(Pairing, PairsEveryTranslationWithItsSource) {
    Dataset en{{english("e1"), english("e2")}, {}};
    Dataset tr{{translated("t1", "e1"), translated("t2", "e2", "ko")}, {}};
    const auto pairs = pair_variants(en, tr);
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[0].source.task_id, "e1");
    EXPECT_EQ(pairs[1].target.language, "ko");
}

TEST(Pairing, DanglingSourceIdIsNamed) {
    Dataset en{{english("e1")}, {}};
    Dataset tr{{translated("t1", "missing-id")}, {}};
    try {
        pair_variants(en, tr);
        FAIL() << "expected PairingError";
    } catch (const PairingError& e) {
        EXPECT_EQ(e.task_id(), "missing-id");
        EXPECT_NE(std::string(e.what()).find("t1"), std::string::npos);
    }
}

TEST(Pairing, TargetMustNotBeEnglish) {
    Dataset en{{english("e1")}, {}};
    Dataset tr{{translated("t1", "e1", "en")}, {}};
    EXPECT_THROW(pair_variants(en, tr), Error);
}
