#include <doctest.h>

#include <sstream>

#include "imitlab/dataset.hpp"
#include "imitlab/error.hpp"
#include "support.hpp"

using namespace imitlab;

TEST_SUITE("dataset") {
  TEST_CASE("csv round trip is bit-exact") {
    Dataset d = testing::blobs(40, 3, 3, 1);
    d.row(0)[1] = 0.1 + 0.2;  // not representable in few digits
    std::stringstream s;
    write_csv(d, s);
    const Dataset back = read_csv(s);
    CHECK(back == d);
  }

  TEST_CASE("csv header and n_classes inference") {
    std::istringstream in("f0,f1,label\n0.5,1,0\n2,3,4\n\n");
    const Dataset d = read_csv(in);
    CHECK(d.size() == 2);
    CHECK(d.n_features() == 2);
    CHECK(d.n_classes() == 5);
    CHECK(d.row(1)[1] == 3.0);
  }

  TEST_CASE("csv errors name the line") {
    std::istringstream bad("f0,label\n1,0\nx,1\n");
    try {
      read_csv(bad, "data.csv");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
      CHECK(std::string(e.what()).find("data.csv:3") != std::string::npos);
    }
    std::istringstream short_row("f0,f1,label\n1,0\n");
    CHECK_THROWS_AS(read_csv(short_row), Error);
    std::istringstream empty("f0,label\n");
    try {
      read_csv(empty);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyDataset);
    }
    std::istringstream negative("f0,label\n1,-1\n");
    CHECK_THROWS_AS(read_csv(negative), Error);
  }

  TEST_CASE("min-max scaling") {
    Dataset d(2, 2);
    const double r0[] = {1, 5}, r1[] = {3, 5}, r2[] = {2, 5};
    d.push_back(r0, 0);
    d.push_back(r1, 1);
    d.push_back(r2, 0);
    min_max_scale(d);
    CHECK(d.row(0)[0] == 0.0);
    CHECK(d.row(1)[0] == 1.0);
    CHECK(d.row(2)[0] == 0.5);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d.row(i)[1] == 0.0);
  }

  TEST_CASE("subset and class counts") {
    const Dataset d = testing::blobs(30, 2, 3, 2);
    const std::vector<std::size_t> idx{4, 1, 1};
    const Dataset s = d.subset(idx);
    CHECK(s.size() == 3);
    CHECK(s.label(0) == d.label(4));
    CHECK(s.row(2)[0] == d.row(1)[0]);
    const auto counts = d.class_counts();
    CHECK(counts == std::vector<std::size_t>{10, 10, 10});
  }

  TEST_CASE("validate rejects bad labels") {
    Dataset d(1, 2);
    const double r[] = {0.0};
    d.push_back(r, 2);
    CHECK_THROWS_AS(d.validate(), Error);
  }
}
