// Python surface: the pure scoring and statistics functions plus tournament
// runs and report regeneration. JSON crosses the boundary as text.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "arena/aesopian.h"
#include "arena/allegories.h"
#include "arena/attuned.h"
#include "arena/harness.h"
#include "arena/stats.h"
#include "arena/visual_allusions.h"

namespace py = pybind11;
using namespace arena;

namespace {

py::dict report_dict(const harness::Report& r) {
  py::dict out;
  out["completed"] = r.completed;
  out["aborted"] = r.aborted;
  py::list tables;
  for (const auto& t : r.tables) {
    py::dict d;
    d["name"] = t.name;
    d["title"] = t.title;
    d["notes"] = t.notes;
    d["csv"] = harness::to_csv(t);
    d["markdown"] = harness::to_markdown(t);
    py::list rows;
    for (const auto& row : t.rows) {
      py::dict rd;
      rd["model"] = row.model;
      py::dict m;
      for (const auto& [k, v] : row.metrics) m[py::str(k)] = v;
      rd["metrics"] = m;
      rd["flags"] = row.flags;
      rows.append(rd);
    }
    d["rows"] = rows;
    tables.append(d);
  }
  out["tables"] = tables;
  return out;
}

harness::Report report_for(const std::filesystem::path& dir) {
  const auto transcripts = harness::load_transcripts(dir);
  return harness::recompute_report(transcripts);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-agent subtext games: scoring, statistics and tournaments";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<harness::TranscriptError>(m, "TranscriptError", PyExc_ValueError);

  py::class_<stats::TestResult>(m, "TestResult")
      .def_readonly("statistic", &stats::TestResult::statistic)
      .def_readonly("p_value", &stats::TestResult::p_value)
      .def_readonly("method", &stats::TestResult::method)
      .def_readonly("degenerate", &stats::TestResult::degenerate)
      .def_readonly("warning", &stats::TestResult::warning)
      .def("__repr__", [](const stats::TestResult& r) {
        return "TestResult(" + r.method + ", statistic=" + std::to_string(r.statistic) +
               ", p=" + std::to_string(r.p_value) + ")";
      });

  m.def("mann_whitney_u", [](const std::vector<double>& a, const std::vector<double>& b) {
    return stats::mann_whitney_u(a, b);
  });
  m.def("chi2_2x2", [](const stats::Table2x2& t) { return stats::chi2_2x2(t); }, py::arg("table"));
  m.def("paired_t", [](const std::vector<double>& a, const std::vector<double>& b) { return stats::paired_t(a, b); });

  // Seats are 0-based; card ids are whatever the caller uses.
  m.def("score_round", &va::score_round, py::arg("storyteller"), py::arg("storyteller_card"), py::arg("played"),
        py::arg("votes"));
  m.def(
      "classify_clue",
      [](const std::map<int, int>& votes, int card) { return std::string(va::to_string(va::classify_clue(votes, card))); },
      py::arg("votes"), py::arg("storyteller_card"));

  m.def("ring_points", &attuned::ring_points, py::arg("delta"));
  m.def(
      "score_attuned",
      [](int target, int sender, int opponent) {
        const auto p = attuned::score_attuned(target, sender, opponent);
        return std::make_pair(p.sender_team, p.opponent_team);
      },
      py::arg("target"), py::arg("sender_team_guess"), py::arg("opponent_team_guess"));
  m.def("aggregate_guess", &attuned::aggregate_guess);

  m.def(
      "classify_outcome",
      [](const std::string& inquisitor, const std::string& critic) {
        const aesopian::Interpretation i{aesopian::label_from_string(inquisitor), ""};
        const aesopian::Interpretation c{aesopian::label_from_string(critic), ""};
        return std::string(aesopian::to_string(aesopian::classify_outcome(i, c)));
      },
      py::arg("inquisitor"), py::arg("critic"));

  m.def("strip_hidden_clues", [](const std::string& story) {
    auto [text, clues] = allegories::strip_hidden_clues(story);
    std::vector<std::string> bodies;
    for (const auto& c : clues) bodies.push_back(text.substr(c.begin, c.end - c.begin));
    return std::make_pair(text, bodies);
  });

  m.def("schedule_games", &harness::schedule_games, py::arg("pool_size"), py::arg("games"), py::arg("seats"));

  m.def(
      "run_tournament",
      [](const std::filesystem::path& config, const std::filesystem::path& out_dir, std::optional<int> games) {
        auto c = harness::load_config(config);
        c.out_dir = out_dir;
        if (games) c.games = *games;
        harness::TournamentResult r;
        {
          py::gil_scoped_release release;
          r = harness::run_tournament(c, harness::make_gateway_for(c.pool));
        }
        return report_dict(r.report);
      },
      py::arg("config"), py::arg("out_dir"), py::arg("games") = py::none(),
      "Runs a tournament config, writes transcripts to out_dir and returns the report.");
  m.def(
      "recompute_report", [](const std::filesystem::path& dir) { return report_dict(report_for(dir)); },
      py::arg("transcripts_dir"));
  m.def(
      "read_transcript",
      [](const std::filesystem::path& path) {
        const auto t = harness::read_transcript(path);
        return harness::serialize(t);
      },
      py::arg("path"), "Validated JSON-lines text of one transcript.");
}
