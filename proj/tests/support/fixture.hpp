#pragma once

// Hand-built 5-post corpus and its expected ingestion outputs.
//
// Week grid starts at 6048000 (a multiple of 604800). Post numbers: alice
// 1,2,3 and bob 1,2. Log buckets: p=1,2 -> 0, p=3 -> 1. "torque" appears
// once and falls below min_count=1 (strictly-greater rule); week 0 includes
// a timestamp one second before the week boundary.

#include <string>

namespace concmtf::testing {

inline const std::string kFixturePosts =
    R"({"user":"alice","ts":6048000,"tokens":["flux","flux","ring"],"tags":["em","induction"]}
{"user":"bob","ts":6652799,"tokens":["flux","wave"],"tags":["em"]}
{"user":"alice","ts":6652800,"tokens":["ring","flux"],"tags":[]}
{"user":"alice","ts":7257600,"tokens":["flux","torque"],"tags":["mech"]}
{"user":"bob","ts":7257605,"tokens":["wave","wave","flux"],"tags":["em","mech"]}
)";

inline const std::string kFixtureBuildConfig =
    R"({"min_count": 1, "bucket": {"kind": "log", "size": 9}})";

inline const std::string kExpectedTensor =
    "#tensor3 3 3 9\n"
    "0\t0\t0\t3\n"
    "1\t0\t0\t1\n"
    "2\t0\t0\t1\n"
    "0\t1\t0\t1\n"
    "2\t1\t0\t1\n"
    "0\t2\t0\t1\n"
    "1\t2\t0\t2\n"
    "0\t2\t1\t1\n";

inline const std::string kExpectedY =
    "#matrix 3 3\n"
    "4\t2\t2\n"
    "3\t2\t0\n"
    "1\t0\t1\n";

inline const std::string kExpectedVocab =
    "0\tflux\t6\n"
    "1\twave\t3\n"
    "2\tring\t2\n";

inline const std::string kExpectedTags =
    "0\tem\t8\n"
    "1\tmech\t4\n"
    "2\tinduction\t3\n";

}  // namespace concmtf::testing
