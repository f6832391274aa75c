#include "halo/io.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "halo/errors.hpp"

namespace halo {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

TrajectoryDoc to_doc(const Trajectory& traj) {
  TrajectoryDoc doc;
  doc.d = traj.d;
  doc.dynamics_seed = traj.dynamics_seed;
  doc.observation_seed = traj.observation_seed;
  doc.steps.reserve(traj.per_step.size());
  const bool has_states = !traj.states.empty();
  if (has_states && traj.states.size() != traj.per_step.size() + 1)
    throw ValidationError("to_doc: states/per_step misaligned");
  for (std::size_t t = 0; t < traj.per_step.size(); ++t) {
    TrajectoryDoc::Step s;
    if (has_states) {
      const Vec& v = traj.states[t + 1];
      s.state.assign(v.data(), v.data() + v.size());
    }
    s.entropy = traj.per_step[t].entropy;
    s.drift = traj.per_step[t].drift;
    s.omega = traj.per_step[t].omega;
    s.event = traj.per_step[t].event;
    doc.steps.push_back(std::move(s));
  }
  return doc;
}

std::string trajectory_doc_to_json(const TrajectoryDoc& doc) {
  json steps = json::array();
  for (const auto& s : doc.steps) {
    steps.push_back(json{{"state", s.state},
                         {"entropy", s.entropy},
                         {"drift", s.drift},
                         {"omega", s.omega},
                         {"event", to_string(s.event)}});
  }
  json out{{"d", doc.d},
           {"seeds", json::array({doc.dynamics_seed, doc.observation_seed})},
           {"steps", std::move(steps)}};
  return out.dump();
}

std::string trajectory_to_json(const Trajectory& traj) {
  return trajectory_doc_to_json(to_doc(traj));
}

TrajectoryDoc trajectory_doc_from_json(const std::string& text) {
  json in = json::parse(text, nullptr, false);
  if (in.is_discarded() || !in.is_object())
    throw ValidationError("trajectory document: not a JSON object");
  for (const char* key : {"d", "seeds", "steps"})
    if (!in.contains(key))
      throw ValidationError(std::string("trajectory document: missing field '") + key + "'");
  TrajectoryDoc doc;
  if (!in["d"].is_number_integer() || in["d"].get<int>() < 0)
    throw ValidationError("trajectory document: 'd' must be a non-negative integer");
  doc.d = in["d"].get<int>();
  if (!in["seeds"].is_array() || in["seeds"].size() != 2)
    throw ValidationError("trajectory document: 'seeds' must be [dynamics, observation]");
  doc.dynamics_seed = in["seeds"][0].get<std::uint64_t>();
  doc.observation_seed = in["seeds"][1].get<std::uint64_t>();
  if (!in["steps"].is_array())
    throw ValidationError("trajectory document: 'steps' must be an array");
  std::size_t idx = 0;
  for (const auto& s : in["steps"]) {
    const std::string at = "steps[" + std::to_string(idx++) + "]";
    if (!s.is_object()) throw ValidationError("trajectory document: " + at + " not an object");
    for (const char* key : {"state", "entropy", "drift", "omega", "event"})
      if (!s.contains(key))
        throw ValidationError("trajectory document: " + at + " missing '" + key + "'");
    TrajectoryDoc::Step step;
    if (!s["state"].is_array())
      throw ValidationError("trajectory document: " + at + ".state must be an array");
    step.state = s["state"].get<std::vector<double>>();
    if (step.state.size() != static_cast<std::size_t>(doc.d))
      throw ValidationError("trajectory document: " + at + ".state has wrong dimension");
    step.entropy = s["entropy"].get<double>();
    step.drift = s["drift"].get<double>();
    step.omega = s["omega"].get<double>();
    step.event = step_event_from_string(s["event"].get<std::string>());
    doc.steps.push_back(std::move(step));
  }
  return doc;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "step,event,entropy,drift,omega";
  for (int i = 0; i < traj.d; ++i) out << ",state_" << i;
  out << "\n";
  const bool has_states = !traj.states.empty();
  for (std::size_t t = 0; t < traj.per_step.size(); ++t) {
    const StepRecord& r = traj.per_step[t];
    out << (t + 1) << ',' << to_string(r.event) << ',' << format_double(r.entropy) << ','
        << format_double(r.drift) << ',' << format_double(r.omega);
    if (has_states)
      for (int i = 0; i < traj.d; ++i) out << ',' << format_double(traj.states[t + 1][i]);
    out << "\n";
  }
  return out.str();
}

std::string phase_grid_to_csv(const PhaseGrid& grid) {
  std::ostringstream out;
  out << "length,difficulty,success_rate,n_seeds,diverged\n";
  for (std::size_t r = 0; r < grid.lambdas.size(); ++r)
    for (std::size_t c = 0; c < grid.lengths.size(); ++c)
      out << grid.lengths[c] << ',' << format_double(grid.lambdas[r]) << ','
          << format_double(grid.success_rates[r][c]) << ',' << grid.n_seeds << ','
          << grid.diverged[r][c] << "\n";
  return out.str();
}

std::string horizon_curve_to_csv(const PhaseGrid& grid) {
  std::ostringstream out;
  out << "difficulty,n_star\n";
  for (double lambda : grid.lambdas) {
    HorizonParams params{lambda, grid.sigma2, matched_psi(grid.success_tol)};
    out << format_double(lambda) << ',' << format_double(critical_horizon(params)) << "\n";
  }
  return out.str();
}

std::string trace_table_to_csv(const std::vector<double>& analytic, const EmpiricalTrace& emp) {
  if (analytic.size() != emp.traces.size())
    throw ValidationError("trace_table_to_csv: analytic/empirical length mismatch");
  std::ostringstream out;
  out << "step,analytic_trace,empirical_trace,stderr\n";
  for (std::size_t t = 0; t < analytic.size(); ++t)
    out << (t + 1) << ',' << format_double(analytic[t]) << ',' << format_double(emp.traces[t])
        << ',' << format_double(emp.stderrs[t]) << "\n";
  return out.str();
}

std::string calibration_to_json(const CalibratedObserver& cal) {
  json out{{"alpha", cal.calibration.alpha},
           {"beta", cal.calibration.beta},
           {"fit",
            {{"n_samples", cal.fit.n_samples},
             {"log_loss", cal.fit.log_loss},
             {"boundary_entropy", cal.fit.boundary_entropy},
             {"w", cal.fit.w},
             {"b", cal.fit.b}}}};
  return out.dump();
}

CalibratedObserver calibration_from_json(const std::string& text) {
  json in = json::parse(text, nullptr, false);
  if (in.is_discarded() || !in.is_object() || !in.contains("alpha") || !in.contains("beta"))
    throw ValidationError("calibration document: expected {alpha, beta, fit}");
  CalibratedObserver cal;
  cal.calibration.alpha = in["alpha"].get<double>();
  cal.calibration.beta = in["beta"].get<double>();
  cal.calibration.validate();
  if (in.contains("fit")) {
    const json& f = in["fit"];
    cal.fit.n_samples = f.value("n_samples", 0);
    cal.fit.log_loss = f.value("log_loss", 0.0);
    cal.fit.boundary_entropy = f.value("boundary_entropy", cal.calibration.boundary());
    cal.fit.w = f.value("w", 0.0);
    cal.fit.b = f.value("b", 0.0);
  } else {
    cal.fit.boundary_entropy = cal.calibration.boundary();
  }
  return cal;
}

std::string drift_samples_to_csv(const std::vector<DriftSample>& samples) {
  std::ostringstream out;
  out << "entropy,label\n";
  for (const auto& s : samples)
    out << format_double(s.entropy) << ',' << (s.unstable ? "unstable" : "stable") << "\n";
  return out.str();
}

std::vector<DriftSample> drift_samples_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("drift samples: empty file");
  // tolerate trailing carriage returns from foreign tools
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (strip(line) != "entropy,label")
    throw ValidationError("drift samples: expected header 'entropy,label', got '" + line + "'");
  std::vector<DriftSample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ValidationError("drift samples: line " + std::to_string(lineno) + " has no comma");
    DriftSample s;
    try {
      s.entropy = std::stod(line.substr(0, comma));
    } catch (const std::exception&) {
      throw ValidationError("drift samples: line " + std::to_string(lineno) + " bad entropy");
    }
    const std::string label = line.substr(comma + 1);
    if (label == "unstable") s.unstable = true;
    else if (label == "stable") s.unstable = false;
    else
      throw ValidationError("drift samples: line " + std::to_string(lineno) + " bad label '" +
                            label + "'");
    samples.push_back(s);
  }
  return samples;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace halo
