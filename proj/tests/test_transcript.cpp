#include <doctest.h>

#include <random>
#include <sstream>

#include "overlap/csv.hpp"
#include "overlap/errors.hpp"
#include "overlap/transcript.hpp"
#include "support.hpp"

using namespace overlap;
using testing::agent;
using testing::client;

namespace {

std::vector<Dialogue> parse(const std::string& text, const FormatConfig& cfg = {}) {
    std::istringstream in(text);
    return parse_transcript(in, cfg);
}

std::vector<std::vector<std::string>> read_all(const std::string& text, char delim = ',') {
    std::istringstream in(text);
    CsvReader r(in, delim);
    std::vector<std::vector<std::string>> out;
    while (auto rec = r.next()) {
        out.push_back(*rec);
    }
    return out;
}

}  // namespace

TEST_CASE("csv reader handles quotes, doubled quotes, embedded newlines and CRLF") {
    const auto rows = read_all("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n,,\n");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
    CHECK(rows[1] == std::vector<std::string>{"x,1", "say \"hi\"", "two\nlines"});
    CHECK(rows[2] == std::vector<std::string>{"", "", ""});
}

TEST_CASE("csv reader reports an unterminated quote with its record number") {
    std::istringstream in("h\nok\n\"never closed\n");
    CsvReader r(in, ',');
    CHECK(r.next());
    CHECK(r.next());
    try {
        r.next();
        FAIL("expected RowError");
    } catch (const RowError& e) {
        CHECK(e.row() == 3);
    }
}

TEST_CASE("csv writer output reads back unchanged") {
    const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
    std::ostringstream out;
    write_csv_record(out, fields);
    write_csv_record(out, {"a", "b"}, '\t');
    const auto rows = read_all(out.str());
    REQUIRE(rows.size() >= 1);
    CHECK(rows[0] == fields);
}

TEST_CASE("two rows of one dialogue give one dialogue with indices 0 and 1") {
    const auto d = parse("dialogue_id,channel,start_ms,end_ms,text\n"
                         "d1,agent,0,5000,алло\n"
                         "d1,client,6000,8000,да\n");
    REQUIRE(d.size() == 1);
    CHECK(d[0].dialogue_id == "d1");
    REQUIRE(d[0].turns.size() == 2);
    CHECK(d[0].turns[0] == Turn{"d1", 0, agent, 0, 5000, "алло"});
    CHECK(d[0].turns[1] == Turn{"d1", 1, client, 6000, 8000, "да"});
    CHECK_FALSE(d[0].audio_uri);
}

TEST_CASE("missing end column is a schema error naming end") {
    try {
        parse("dialogue_id,channel,start_ms,text\nd1,agent,0,x\n");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.column() == "end");
    }
}

TEST_CASE("end before start is a row validation error citing the row") {
    try {
        parse("dialogue_id,channel,start_ms,end_ms,text\n"
              "d1,agent,0,1000,ok\n"
              "d1,client,5000,4000,bad\n");
        FAIL("expected RowValidationError");
    } catch (const RowValidationError& e) {
        CHECK(e.row() == 3);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("dialogue_id,channel,start_ms,end_ms,text\nd1,agent,7,7,zero\n"), RowValidationError);
}

TEST_CASE("bad timestamps and unknown channels are row errors") {
    const std::string header = "dialogue_id,channel,start_ms,end_ms,text\n";
    for (const auto* row : {"d1,agent,abc,10,x\n", "d1,agent,-5,10,x\n", "d1,agent,1,,x\n", "d1,speaker3,0,10,x\n",
                            "d1,agent,0,10\n", ",agent,0,10,x\n"}) {
        CAPTURE(row);
        try {
            parse(header + row);
            FAIL("expected RowError");
        } catch (const RowValidationError&) {
            FAIL("not a validation error");
        } catch (const RowError& e) {
            CHECK(e.row() == 2);
        }
    }
}

TEST_CASE("column names and channel values can be remapped") {
    auto cfg = parse_column_map("dialogue_id=call,channel=spk,start=begin,end=finish,text=utt,channel:0=agent,channel:1=client");
    cfg.delimiter = ';';
    const auto d = parse("call;spk;begin;finish;utt\nc9;1;10;20;x\nc9;0;10;30;y\n", cfg);
    REQUIRE(d.size() == 1);
    CHECK(d[0].turns[0].channel == agent);  // equal start: agent first
    CHECK(d[0].turns[0].text == "y");
    CHECK(d[0].turns[1].channel == client);

    CHECK_THROWS_AS(parse_column_map("colour=x"), ConfigError);
    CHECK_THROWS_AS(parse_column_map("channel:0=caller"), ConfigError);
    CHECK_THROWS_AS(parse_column_map("start"), ConfigError);
}

TEST_CASE("fractional timestamps round half up to integer milliseconds") {
    CHECK(parse_timestamp_ms("1.2345", TimeUnit::seconds) == 1235);
    CHECK(parse_timestamp_ms("1.2344", TimeUnit::seconds) == 1234);
    CHECK(parse_timestamp_ms("1.2", TimeUnit::seconds) == 1200);
    CHECK(parse_timestamp_ms("5", TimeUnit::seconds) == 5000);
    CHECK(parse_timestamp_ms(".5", TimeUnit::seconds) == 500);
    CHECK(parse_timestamp_ms("0.0005", TimeUnit::seconds) == 1);
    CHECK(parse_timestamp_ms("0.0004999", TimeUnit::seconds) == 0);
    CHECK(parse_timestamp_ms("12.5", TimeUnit::milliseconds) == 13);
    CHECK(parse_timestamp_ms("12.49", TimeUnit::milliseconds) == 12);
    CHECK(parse_timestamp_ms(" 42 ", TimeUnit::milliseconds) == 42);
    for (const auto* bad : {"", "abc", "-1", "1.", "1e3", "1.2.3", "+4", "1234567890123456"}) {
        CAPTURE(bad);
        CHECK_FALSE(parse_timestamp_ms(bad, TimeUnit::milliseconds));
    }

    FormatConfig cfg;
    cfg.time_unit = TimeUnit::seconds;
    const auto d = parse("dialogue_id,channel,start_ms,end_ms,text\nd,agent,0.25,1.0005,x\n", cfg);
    CHECK(d[0].turns[0].start_ms == 250);
    CHECK(d[0].turns[0].end_ms == 1001);
}

TEST_CASE("parser tolerates a BOM, blank lines and empty text; keeps dialogues in first-seen order") {
    const auto d = parse("\xEF\xBB\xBF" "dialogue_id,channel,start_ms,end_ms,text\n"
                         "b,agent,0,10,\n"
                         "\n"
                         "a,client,0,10,x\n"
                         "b,client,20,30,y\n");
    REQUIRE(d.size() == 2);
    CHECK(d[0].dialogue_id == "b");
    CHECK(d[1].dialogue_id == "a");
    CHECK(d[0].turns[0].text.empty());
    CHECK(d[0].turns.size() == 2);
}

TEST_CASE("tab-separated input") {
    FormatConfig cfg;
    cfg.delimiter = '\t';
    const auto d = parse("dialogue_id\tchannel\tstart_ms\tend_ms\ttext\nd\tagent\t0\t10\thello, world\n", cfg);
    CHECK(d[0].turns[0].text == "hello, world");
}

TEST_CASE("audio locator is taken from the optional column and must be consistent") {
    const std::string header = "dialogue_id,channel,start_ms,end_ms,text,audio_uri\n";
    const auto d = parse(header + "d,agent,0,10,x,file:///a.wav\nd,client,20,30,y,\n");
    CHECK(d[0].audio_uri == "file:///a.wav");
    CHECK_THROWS_AS(parse(header + "d,agent,0,10,x,a.wav\nd,client,20,30,y,b.wav\n"), RowError);
}

TEST_CASE("order_turns sorts by start then channel and reindexes") {
    auto out = order_turns({testing::turn("d", 0, agent, 6000, 7000), testing::turn("d", 1, agent, 0, 100)});
    REQUIRE(out.size() == 2);
    CHECK(out[0].start_ms == 0);
    CHECK(out[0].turn_index == 0);
    CHECK(out[1].start_ms == 6000);
    CHECK(out[1].turn_index == 1);

    out = order_turns({testing::turn("d", 0, client, 0, 10, "c"), testing::turn("d", 1, agent, 0, 10, "a")});
    CHECK(out[0].channel == agent);
    CHECK(out[1].channel == client);

    CHECK(order_turns({}).empty());
    CHECK_THROWS_AS(order_turns({testing::turn("d", 0, agent, 0, 1), testing::turn("e", 1, agent, 2, 3)}), UsageError);
}

TEST_CASE("order_turns is stable for equal keys and idempotent") {
    std::mt19937_64 gen(11);
    for (int round = 0; round < 200; ++round) {
        std::vector<Turn> turns;
        const int n = static_cast<int>(gen() % 12);
        for (int i = 0; i < n; ++i) {
            const auto start = static_cast<std::int64_t>(gen() % 4);
            turns.push_back(testing::turn("d", static_cast<std::size_t>(i), gen() % 2 ? agent : client, start,
                                          start + 1, std::to_string(i)));
        }
        const auto once = order_turns(turns);
        CHECK(order_turns(once) == once);
        for (std::size_t i = 1; i < once.size(); ++i) {
            const auto& a = once[i - 1];
            const auto& b = once[i];
            CHECK((a.start_ms < b.start_ms || (a.start_ms == b.start_ms && a.channel <= b.channel)));
            if (a.start_ms == b.start_ms && a.channel == b.channel) {
                CHECK(std::stoi(a.text) < std::stoi(b.text));
            }
        }
    }
}

TEST_CASE("canonical turn file round trip and deterministic parsing") {
    const std::string csv = "dialogue_id,channel,start_ms,end_ms,text,audio_uri\n"
                            "d1,client,6000,8000,\"да, конечно\",rec://1\n"
                            "d1,agent,0,5000,алло,rec://1\n"
                            "d2,agent,100,200,,\n";
    const auto first = parse(csv);
    CHECK(parse(csv) == first);

    std::stringstream file;
    write_turns(file, first);
    const auto back = read_turns(file);
    CHECK(back == first);

    std::istringstream line("{\"dialogue_id\":\"d\",\"turn_index\":1,\"channel\":\"agent\",\"start_ms\":0,"
                            "\"end_ms\":1,\"text\":\"\"}\n");
    CHECK_THROWS_AS(read_turns(line), ValidationError);
}
