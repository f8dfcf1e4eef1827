#include <doctest.h>

#include <semproto/errors.hpp>
#include <semproto/spm.hpp>
#include <semproto/train.hpp>

using namespace semproto;

namespace {

Spm reference_spm(std::uint64_t seed) {
    Rng rng(seed);
    NpmArchitecture arch;
    NPModel model = NPModel::make(arch, rng);
    EnvConfig env;
    Rng mem_rng(seed + 1);
    const EpisodicMemory memory = collect_memory(model, env, 10, mem_rng);
    return construct_spm(model, memory, SpmOptions{});
}

}  // namespace

TEST_CASE("serialize: clause line format") {
    Spm spm;
    spm.cm_width = 8;
    Vocabulary u;
    u.id = 0;
    u.kind = VocabKind::Ucm;
    u.ue = 0;
    u.label = "u1_1";
    Vocabulary d;
    d.id = 1;
    d.kind = VocabKind::Dcm;
    d.ue = 0;
    d.label = "d1_2";
    spm.vocabularies = {u, d};
    spm.clauses.push_back({ClauseKind::Downlink, 0.85, 1, 0, 0, 0});

    const std::string text = serialize_problog(spm);
    CHECK(text.find("0.85::d1_2 :- u1_1.\n") != std::string::npos);
}

TEST_CASE("serialize: probability 1 prints as 1.0 for uniformity") {
    Spm spm;
    spm.cm_width = 8;
    Vocabulary b;
    b.id = 0;
    b.kind = VocabKind::Input;
    b.ue = 1;
    b.level = 0;
    b.label = "b2_0";
    Vocabulary u;
    u.id = 1;
    u.kind = VocabKind::Ucm;
    u.ue = 1;
    u.label = "u2_0";
    spm.vocabularies = {b, u};
    spm.clauses.push_back({ClauseKind::Uplink, 1.0, 1, 0, 1, 1});
    CHECK(serialize_problog(spm).find("1.0::u2_0 :- b2_0.\n") != std::string::npos);
}

TEST_CASE("round-trip: reference SPM is structurally identical") {
    for (std::uint64_t seed : {7u, 19u, 55u}) {
        const Spm spm = reference_spm(seed);
        const std::string text = serialize_problog(spm);
        const Spm parsed = parse_problog(text);
        CHECK(structurally_equal(spm, parsed));
        // serialized form is a fixpoint
        CHECK(serialize_problog(parsed) == text);
        // provenance survives through the meta comments
        CHECK(parsed.source_hash == spm.source_hash);
        CHECK(parsed.options_desc == spm.options_desc);
        CHECK(parsed.sample_weight == spm.sample_weight);
        CHECK(parsed.cm_width == spm.cm_width);
    }
}

TEST_CASE("parse: grant-free clause form is accepted") {
    const std::string text = "1.0::a1_S :- b1_0.\n";
    const Spm spm = parse_problog(text);
    REQUIRE(spm.clauses.size() == 1);
    CHECK(spm.clauses[0].kind == ClauseKind::GrantFree);
    CHECK(spm.vocab(spm.clauses[0].head).action == UeAction::Silence);
    CHECK(spm.vocab(spm.clauses[0].tail).level == 0);
}

TEST_CASE("parse: syntax errors carry line and column") {
    try {
        parse_problog("1.0::u1_0 :- b1_0.\nnot a clause\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }

    CHECK_THROWS_AS(parse_problog("0.5:u1_0 :- b1_0.\n"), ParseError);
    CHECK_THROWS_AS(parse_problog("0.5::u1_0 : b1_0.\n"), ParseError);
    CHECK_THROWS_AS(parse_problog("0.5::u1_0 :- b1_0\n"), ParseError);
    CHECK_THROWS_AS(parse_problog("0.5::x1_0 :- b1_0.\n"), ParseError);
    CHECK_THROWS_AS(parse_problog("0.5::u3_0 :- b3_0.\n"), ParseError);
}

TEST_CASE("parse: probabilities outside [0,1] and duplicates are rejected") {
    CHECK_THROWS_AS(parse_problog("1.5::u1_0 :- b1_0.\n"), ParseError);
    CHECK_THROWS_AS(parse_problog("-0.1::u1_0 :- b1_0.\n"), ParseError);
    CHECK_THROWS_AS(parse_problog("0.0::u1_0 :- b1_0.\n"), ParseError);
    CHECK_THROWS_AS(
        parse_problog("0.5::d1_0 :- u1_0.\n0.4::d1_0 :- u1_0.\n"), ParseError);
    // invalid stage pair
    CHECK_THROWS_AS(parse_problog("0.5::b1_0 :- u1_0.\n"), ParseError);
}

TEST_CASE("parse: comments and blank lines are skipped") {
    const std::string text =
        "% a comment\n\n   \n1.0::u1_0 :- b1_0.\n% trailing comment\n";
    const Spm spm = parse_problog(text);
    CHECK(spm.clauses.size() == 1);
}

TEST_CASE("file round-trip through disk") {
    const Spm spm = reference_spm(23);
    const std::string path = "problog_roundtrip_test.pl";
    save_problog_file(spm, path);
    const Spm loaded = load_problog_file(path);
    CHECK(structurally_equal(spm, loaded));
    std::remove(path.c_str());
}
