#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "fusereg/io/config.hpp"
#include "fusereg/io/csv.hpp"
#include "test_helpers.hpp"

using namespace fusereg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("fusereg_io_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  detail::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.below(12)) - 6);
    CHECK(parse_double(format_double(v), "test") == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("dataset CSV round trip") {
  const fs::path dir = temp_dir("dataset");
  const GroupedDataset data = test_helpers::random_dataset(3, 4, 7, 3);
  const std::string path = (dir / "data.csv").string();
  write_dataset_csv(data, path);
  const GroupedDataset loaded = read_dataset_csv(path);
  REQUIRE(loaded.K() == 3);
  REQUIRE(loaded.p() == 4);
  CHECK(loaded.covariate_names() == data.covariate_names());
  for (int k = 0; k < 3; ++k) {
    CHECK(loaded.group(k).id == data.group(k).id);
    CHECK(loaded.group(k).X == data.group(k).X);  // exact via shortest repr
    CHECK(loaded.group(k).y == data.group(k).y);
  }
}

TEST_CASE("dataset CSV rows may arrive in any order") {
  const fs::path dir = temp_dir("reorder");
  const std::string path = (dir / "data.csv").string();
  write_text(path,
             "group,y,x1\n"
             "b,1,2\n"
             "a,3,4\n"
             "b,5,6\n");
  const GroupedDataset data = read_dataset_csv(path);
  REQUIRE(data.K() == 2);
  CHECK(data.group(0).id == "b");  // first appearance order
  CHECK(data.group(0).n() == 2);
  CHECK(data.group(1).id == "a");
  CHECK(data.group(0).y(1) == 5.0);
}

TEST_CASE("dataset CSV errors carry line numbers") {
  const fs::path dir = temp_dir("badcsv");
  const std::string path = (dir / "data.csv").string();
  write_text(path, "group,y,x1\na,1,2\na,3\n");
  CHECK_THROWS_WITH(read_dataset_csv(path), Catch::Matchers::ContainsSubstring("line 3"));

  write_text(path, "group,y,x1\na,1,zzz\n");
  CHECK_THROWS_WITH(read_dataset_csv(path), Catch::Matchers::ContainsSubstring("line 2"));

  write_text(path, "id,y,x1\na,1,2\n");
  CHECK_THROWS_WITH(read_dataset_csv(path), Catch::Matchers::ContainsSubstring("header"));

  CHECK_THROWS_AS(read_dataset_csv((dir / "missing.csv").string()), IoError);
}

TEST_CASE("coefficients CSV round trip") {
  const fs::path dir = temp_dir("coef");
  const std::vector<std::string> names{"x1", "x2", "x3"};
  const std::vector<std::string> ids{"a", "b"};
  const Matrix B = test_helpers::random_coefficients(3, 2, 5);
  const std::string path = (dir / "coef.csv").string();
  write_coefficients_csv(names, ids, B, path);
  const Matrix loaded = read_coefficients_csv(path, names, ids);
  CHECK(loaded == B);
}

TEST_CASE("atomic writes replace content and leave no temp file") {
  const fs::path dir = temp_dir("atomic");
  const std::string path = (dir / "out.txt").string();
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  CHECK(read_text(path) == "second");
  CHECK(!fs::exists(path + ".tmp"));
  CHECK_THROWS_AS(write_file_atomic((dir / "no_such_dir" / "out.txt").string(), "x"), IoError);
}

TEST_CASE("cv table and report CSV shapes") {
  const fs::path dir = temp_dir("tables");
  CvResult cv;
  cv.best_lambda = 1.0;
  cv.best_gamma = 0.0;
  CvCell cell;
  cell.lambda = 1.0;
  cell.gamma = 0.5;
  cell.fold_rmse = {0.25, 0.75};
  cell.mean_rmse = 0.5;
  cv.table.push_back(cell);
  const std::string cv_path = (dir / "cv.csv").string();
  write_cv_table_csv(cv, cv_path);
  CHECK(read_text(cv_path) ==
        "lambda,gamma,fold,weighted_rmse\n1,0.5,1,0.25\n1,0.5,2,0.75\n");

  ComparisonReport report;
  report.group_ids = {"a", "b"};
  ReplicateRecord row;
  row.replicate = 0;
  row.method = Method::Pooled;
  row.ok = true;
  row.weighted_rmse = 0.5;
  row.auroc = 0.75;
  row.runtime_sec = 1.0;
  row.subgroup_rmse = {0.4, 0.6};
  report.rows.push_back(row);
  ReplicateRecord failed;
  failed.replicate = 1;
  failed.method = Method::Pooled;
  failed.ok = false;
  failed.error = "boom";
  report.rows.push_back(failed);

  const std::string report_path = (dir / "report.csv").string();
  write_report_csv({{"5", report}}, report_path, false);
  CHECK(read_text(report_path) ==
        "sweep,replicate,method,metric,subgroup,value\n"
        "5,1,pooled,weighted_rmse,all,0.5\n"
        "5,1,pooled,auroc,all,0.75\n"
        "5,1,pooled,rmse,a,0.4\n"
        "5,1,pooled,rmse,b,0.6\n"
        "5,2,pooled,failed,all,1\n");

  write_report_csv({{"5", report}}, report_path, true);
  CHECK_THAT(read_text(report_path),
             Catch::Matchers::ContainsSubstring("runtime_seconds,all,1"));
}

TEST_CASE("pair entry CSV parsing") {
  const fs::path dir = temp_dir("pairs");
  const std::string path = (dir / "tau.csv").string();
  write_text(path, "group_a,group_b,value\na,b,0.1\nb,c,1\n");
  const auto entries = read_pair_entries_csv(path);
  REQUIRE(entries.size() == 2);
  CHECK(std::get<0>(entries[0]) == "a");
  CHECK(std::get<2>(entries[1]) == 1.0);

  write_text(path, "wrong,header,here\na,b,0.1\n");
  CHECK_THROWS_AS(read_pair_entries_csv(path), ValidationError);
}

TEST_CASE("run config file parsing and flag override") {
  const fs::path dir = temp_dir("config");
  const std::string path = (dir / "run.conf").string();
  write_text(path,
             "# experiment settings\n"
             "lambda = 1.5\n"
             "method = pooled  # trailing comment\n"
             "threads = 4\n"
             "\n");
  RunConfig cfg;
  cfg.load_file(path);
  CHECK(cfg.get_double("lambda", 0.0) == 1.5);
  CHECK(cfg.get_string("method", "") == "pooled");
  CHECK(cfg.get_int("threads", 1) == 4);
  CHECK(cfg.get_double("missing", 9.0) == 9.0);
  CHECK_THROWS_AS(cfg.require_string("absent"), ValidationError);
  CHECK_THROWS_AS(cfg.get_int("lambda", 0), ValidationError);  // 1.5 is not integral

  const std::string config_flag = "--config";
  std::string lambda_flag = "--lambda";
  std::string lambda_value = "2.5";
  std::vector<char*> argv;
  std::string prog = "tool", cmd = "fit";
  std::string cpath = path;
  argv.push_back(prog.data());
  argv.push_back(cmd.data());
  argv.push_back(const_cast<char*>(config_flag.data()));
  argv.push_back(cpath.data());
  argv.push_back(lambda_flag.data());
  argv.push_back(lambda_value.data());
  const RunConfig merged = RunConfig::from_args(static_cast<int>(argv.size()), argv.data(), 2);
  CHECK(merged.get_double("lambda", 0.0) == 2.5);  // flag wins
  CHECK(merged.get_string("method", "") == "pooled");

  CHECK(merged.get_bool("flag", true));
  RunConfig booleans;
  booleans.set("yes", "true");
  booleans.set("no", "0");
  booleans.set("bad", "maybe");
  CHECK(booleans.get_bool("yes", false));
  CHECK(!booleans.get_bool("no", true));
  CHECK_THROWS_AS(booleans.get_bool("bad", false), ValidationError);

  RunConfig lists;
  lists.set("values", "1, 2.5,3");
  const auto values = lists.get_double_list("values", {});
  REQUIRE(values.size() == 3);
  CHECK(values[1] == 2.5);

  write_text(path, "novalue\n");
  RunConfig broken;
  CHECK_THROWS_WITH(broken.load_file(path), Catch::Matchers::ContainsSubstring("line 1"));
}
