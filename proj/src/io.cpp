#include "gwl/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gwl {
namespace {

using nlohmann::json;

std::string where(const std::string& path, int line) { return path + ":" + std::to_string(line) + ": "; }

std::vector<double> parse_numbers(std::istringstream& in, const std::string& ctx) {
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError(ctx + "not a number: '" + tok + "'");
    }
  }
  return out;
}

json weight_json(double f) { return is_irrelevant(f) ? json("inf") : json(f); }

double weight_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kIrrelevant;
    throw ParseError("bad weight '" + j.get<std::string>() + "'");
  }
  return j.get<double>();
}

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

}  // namespace

Dataset read_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Dataset data;
  int P = -1;
  std::string line;
  int lineno = 0;

  auto next = [&](std::string& kind, std::istringstream& rest) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      rest.clear();
      rest.str(line);
      if (rest >> kind) return true;
    }
    return false;
  };

  std::string kind;
  std::istringstream rest;
  while (next(kind, rest)) {
    const std::string ctx = where(path, lineno);
    if (kind == "P") {
      if (P >= 0) throw ParseError(ctx + "P given twice");
      if (!(rest >> P) || P < 1) throw ParseError(ctx + "expected 'P <positive integer>'");
      continue;
    }
    if (kind != "task") throw ParseError(ctx + "expected 'task', got '" + kind + "'");
    if (P < 0) throw ParseError(ctx + "'P' must precede the first task");
    std::string type;
    rest >> type;
    std::string sub;
    std::istringstream body;
    if (type == "identity") {
      if (!next(sub, body) || sub != "y") throw ParseError(where(path, lineno) + "expected 'y' line");
      auto y = parse_numbers(body, where(path, lineno));
      if (static_cast<int>(y.size()) != P)
        throw ParseError(where(path, lineno) + "identity task needs " + std::to_string(P) + " values");
      data.push_back(Task::identity(to_eigen(y)));
    } else if (type == "design") {
      int N = 0;
      if (!(rest >> N) || N < 1) throw ParseError(ctx + "expected 'task design <N>'");
      Eigen::MatrixXd X(N, P);
      for (int r = 0; r < N; ++r) {
        if (!next(sub, body) || sub != "x")
          throw ParseError(where(path, lineno) + "expected 'x' line " + std::to_string(r + 1));
        auto row = parse_numbers(body, where(path, lineno));
        if (static_cast<int>(row.size()) != P)
          throw ParseError(where(path, lineno) + "design row needs " + std::to_string(P) + " values");
        for (int c = 0; c < P; ++c) X(r, c) = row[c];
      }
      if (!next(sub, body) || sub != "y") throw ParseError(where(path, lineno) + "expected 'y' line");
      auto y = parse_numbers(body, where(path, lineno));
      if (static_cast<int>(y.size()) != N)
        throw ParseError(where(path, lineno) + "response needs " + std::to_string(N) + " values");
      try {
        data.push_back(Task::regression(std::move(X), to_eigen(y)));
      } catch (const StructuralError& e) {
        throw ParseError(ctx + e.what());
      }
    } else {
      throw ParseError(ctx + "unknown task type '" + type + "'");
    }
  }
  if (data.empty()) throw ParseError(path + ": no tasks");
  return data;
}

void write_tasks(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (data.empty()) throw std::invalid_argument("no tasks to write");
  out.precision(17);
  out << "P " << data.front().num_vars() << "\n";
  for (const Task& t : data) {
    if (t.is_identity()) {
      out << "task identity\ny";
      for (double v : t.y()) out << ' ' << v;
      out << "\n";
      continue;
    }
    out << "task design " << t.num_obs() << "\n";
    for (int r = 0; r < t.num_obs(); ++r) {
      out << 'x';
      for (int c = 0; c < t.num_vars(); ++c) out << ' ' << t.X()(r, c);
      out << "\n";
    }
    out << 'y';
    for (double v : t.y()) out << ' ' << v;
    out << "\n";
  }
}

GroupFamily read_groups(const std::string& path, int num_vars) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Group> groups;
  std::vector<double> f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    std::vector<int> idx;
    double weight = 1.0;
    while (ls >> tok) {
      if (tok.rfind("f=", 0) == 0) {
        try {
          weight = tok == "f=inf" ? kIrrelevant : std::stod(tok.substr(2));
        } catch (const std::exception&) {
          throw ParseError(where(path, lineno) + "bad weight '" + tok + "'");
        }
        continue;
      }
      try {
        std::size_t used = 0;
        const int i = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        idx.push_back(i - 1);
      } catch (const std::exception&) {
        throw ParseError(where(path, lineno) + "bad index '" + tok + "'");
      }
    }
    if (idx.empty()) continue;
    try {
      groups.push_back(make_group(std::move(idx), num_vars));
    } catch (const StructuralError& e) {
      throw ParseError(where(path, lineno) + e.what());
    }
    f.push_back(weight);
  }
  if (groups.empty()) throw ParseError(path + ": no groups");
  try {
    return GroupFamily(num_vars, std::move(groups), std::move(f));
  } catch (const StructuralError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_groups(const std::string& path, const GroupFamily& family) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  for (std::size_t a = 0; a < family.size(); ++a) {
    for (std::size_t j = 0; j < family.group(a).size(); ++j)
      out << (j ? " " : "") << family.group(a)[j] + 1;
    const double f = family.weight(a);
    if (is_irrelevant(f)) out << " f=inf";
    else out << " f=" << f;
    out << "\n";
  }
}

ModelFile model_from_fit(const FitResult& fit, const PriorConfig& prior, const HyperParams& hp,
                         const FitConfig& cfg, bool with_state) {
  ModelFile m;
  m.prior = prior;
  m.hp = hp;
  m.hp.sigma2 = fit.sigma2;
  m.cfg = cfg;
  m.family = fit.family;
  m.objective_trace = fit.objective_trace;
  m.sweeps = fit.sweeps;
  m.converged = fit.converged;
  if (with_state) m.state = fit.state;
  return m;
}

void write_model(const std::string& path, const ModelFile& m) {
  json j;
  j["num_vars"] = m.family.num_vars();
  j["prior"] = {{"family", m.prior.name()}, {"shape", m.prior.shape}};
  j["sigma2"] = m.hp.sigma2;
  j["beta"] = m.hp.beta;
  j["learn_sigma2"] = m.hp.learn_sigma2;
  j["tie_f"] = m.cfg.tie_f;
  j["f_cap"] = m.cfg.f_cap;
  json groups = json::array(), f = json::array();
  for (std::size_t a = 0; a < m.family.size(); ++a) {
    std::vector<int> g = m.family.group(a);
    for (int& i : g) ++i;
    groups.push_back(g);
    f.push_back(weight_json(m.family.weight(a)));
  }
  j["groups"] = groups;
  j["f"] = f;
  j["objective_trace"] = m.objective_trace;
  j["sweeps"] = m.sweeps;
  j["converged"] = m.converged;
  if (m.state) {
    json tasks = json::array();
    for (const TaskState& ts : m.state->tasks)
      tasks.push_back({{"v", vec(ts.v)},
                       {"zeta", ts.zeta},
                       {"stat", ts.stat},
                       {"log_det_sigma", ts.log_det_sigma},
                       {"fit_trace", ts.fit_trace}});
    j["state"] = tasks;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

ModelFile read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ModelFile m;
  try {
    const json j = json::parse(in);
    const int P = j.at("num_vars").get<int>();
    m.prior.family = parse_prior_family(j.at("prior").at("family").get<std::string>());
    m.prior.shape = j.at("prior").at("shape").get<double>();
    m.prior.validate();
    m.hp.sigma2 = j.at("sigma2").get<double>();
    m.hp.beta = j.at("beta").get<double>();
    m.hp.learn_sigma2 = j.value("learn_sigma2", false);
    m.cfg.tie_f = j.value("tie_f", false);
    m.cfg.f_cap = j.value("f_cap", 1e12);
    std::vector<Group> groups;
    for (const auto& g : j.at("groups")) {
      std::vector<int> idx = g.get<std::vector<int>>();
      for (int& i : idx) --i;
      groups.push_back(std::move(idx));
    }
    std::vector<double> f;
    for (const auto& x : j.at("f")) f.push_back(weight_from_json(x));
    m.family = GroupFamily(P, std::move(groups), std::move(f));
    m.objective_trace = j.value("objective_trace", std::vector<double>{});
    m.sweeps = j.value("sweeps", 0);
    m.converged = j.value("converged", false);
    if (j.contains("state")) {
      VariationalState st;
      for (const auto& t : j.at("state")) {
        TaskState ts;
        ts.v = to_eigen(t.at("v").get<std::vector<double>>());
        ts.zeta = t.at("zeta").get<std::vector<double>>();
        ts.stat = t.at("stat").get<std::vector<double>>();
        ts.log_det_sigma = t.at("log_det_sigma").get<double>();
        ts.fit_trace = t.at("fit_trace").get<double>();
        st.tasks.push_back(std::move(ts));
      }
      m.state = std::move(st);
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const StructuralError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return m;
}

}  // namespace gwl
