#include "ctx/builders.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace ctx {

namespace {

std::string scenario_key(const MarginalScenario& x) {
  std::ostringstream out;
  out << x.outcomes << '|';
  for (const auto& c : x.contexts) {
    for (int m : c) out << m << ',';
    out << ';';
  }
  return out.str();
}

// An event reached along a protocol branch: (observable, outcome) pairs
// sorted by observable.  A protocol edge is the sorted set of its events.
using Event = std::vector<std::pair<int, int>>;
using EdgeEvents = std::vector<Event>;

Event augment(const Event& event, int observable, int outcome) {
  Event out = event;
  const auto pos = std::lower_bound(
      out.begin(), out.end(),
      std::make_pair(observable, std::numeric_limits<int>::min()));
  out.insert(pos, {observable, outcome});
  return out;
}

// Distinct protocol edges of x, recursively: an edge rooted at m is the
// union over outcomes a of one induced-scenario edge augmented with (m, a).
// Two protocols whose branches produce the same induced edges produce the
// same edge, so recursing over edges instead of protocols deduplicates as
// it goes.
const std::vector<EdgeEvents>& edge_sets(
    const MarginalScenario& x,
    std::unordered_map<std::string, std::vector<EdgeEvents>>& memo) {
  const std::string key = scenario_key(x);
  const auto found = memo.find(key);
  if (found != memo.end()) return found->second;

  std::set<EdgeEvents> edges;
  if (x.empty()) {
    edges.insert(EdgeEvents{Event{}});
  } else {
    for (int m : x.observables) {
      const MarginalScenario sub = induced_scenario(x, m);
      const std::vector<EdgeEvents> sub_edges = edge_sets(sub, memo);
      std::vector<size_t> pick(x.outcomes, 0);
      while (true) {
        std::set<Event> events;
        for (int a = 0; a < x.outcomes; ++a)
          for (const Event& ev : sub_edges[pick[a]])
            events.insert(augment(ev, m, a));
        edges.insert(EdgeEvents(events.begin(), events.end()));
        int digit = x.outcomes - 1;
        while (digit >= 0 && ++pick[digit] == sub_edges.size()) {
          pick[digit] = 0;
          --digit;
        }
        if (digit < 0) break;
      }
    }
  }
  return memo.emplace(key, std::vector<EdgeEvents>(edges.begin(), edges.end()))
      .first->second;
}

std::string join_digits(const std::vector<int>& values, bool compact) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && !compact) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

MarginalScenario new_marginal_scenario(int observables, int outcomes,
                                       std::vector<std::vector<int>> contexts) {
  if (observables < 0)
    throw std::invalid_argument("marginal scenario: negative observable count");
  if (outcomes < 1)
    throw std::invalid_argument("marginal scenario: outcomes must be >= 1");
  if (observables == 0 && !contexts.empty())
    throw std::invalid_argument("marginal scenario: contexts without observables");

  std::set<std::vector<int>> canonical;
  for (auto& c : contexts) {
    if (c.empty())
      throw std::invalid_argument("marginal scenario: empty context");
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (int m : c)
      if (m < 0 || m >= observables)
        throw std::invalid_argument("marginal scenario: context references observable " +
                                    std::to_string(m));
    canonical.insert(c);
  }

  MarginalScenario x;
  x.outcomes = outcomes;
  x.contexts.assign(canonical.begin(), canonical.end());
  for (size_t i = 0; i < x.contexts.size(); ++i)
    for (size_t j = 0; j < x.contexts.size(); ++j)
      if (i != j && std::includes(x.contexts[j].begin(), x.contexts[j].end(),
                                  x.contexts[i].begin(), x.contexts[i].end()))
        throw std::invalid_argument("marginal scenario: context " +
                                    std::to_string(i) +
                                    " is contained in context " + std::to_string(j));
  std::set<int> covered;
  for (const auto& c : x.contexts) covered.insert(c.begin(), c.end());
  for (int m = 0; m < observables; ++m)
    if (!covered.count(m))
      throw std::invalid_argument("marginal scenario: observable " +
                                  std::to_string(m) + " appears in no context");
  x.observables.assign(covered.begin(), covered.end());
  return x;
}

MarginalScenario induced_scenario(const MarginalScenario& x, int m) {
  if (!std::binary_search(x.observables.begin(), x.observables.end(), m))
    throw std::invalid_argument("induced scenario: observable " +
                                std::to_string(m) + " not in scenario");
  MarginalScenario out;
  out.outcomes = x.outcomes;
  std::set<int> remaining;
  std::set<std::vector<int>> contexts;
  for (const auto& c : x.contexts) {
    if (!std::binary_search(c.begin(), c.end(), m)) continue;
    std::vector<int> reduced;
    for (int o : c)
      if (o != m) reduced.push_back(o);
    if (reduced.empty()) continue;  // m alone was maximal: empty scenario
    remaining.insert(reduced.begin(), reduced.end());
    contexts.insert(std::move(reduced));
  }
  out.observables.assign(remaining.begin(), remaining.end());
  out.contexts.assign(contexts.begin(), contexts.end());
  return out;
}

double count_protocols(const MarginalScenario& x) {
  std::unordered_map<std::string, double> memo;
  const std::function<double(const MarginalScenario&)> count =
      [&](const MarginalScenario& s) -> double {
    if (s.empty()) return 1.0;
    const std::string key = scenario_key(s);
    const auto found = memo.find(key);
    if (found != memo.end()) return found->second;
    double total = 0.0;
    for (int m : s.observables)
      total += std::pow(count(induced_scenario(s, m)),
                        static_cast<double>(s.outcomes));
    memo[key] = total;
    return total;
  };
  return count(x);
}

std::vector<MeasurementProtocol> enumerate_protocols(const MarginalScenario& x,
                                                     double budget) {
  const double total = count_protocols(x);
  if (total > budget)
    throw std::length_error("enumerate_protocols: scenario has " +
                            std::to_string(total) +
                            " protocols, over the budget of " +
                            std::to_string(budget));

  std::unordered_map<std::string, std::vector<MeasurementProtocol>> memo;
  const std::function<const std::vector<MeasurementProtocol>&(const MarginalScenario&)>
      enumerate = [&](const MarginalScenario& s)
      -> const std::vector<MeasurementProtocol>& {
    const std::string key = scenario_key(s);
    const auto found = memo.find(key);
    if (found != memo.end()) return found->second;
    std::vector<MeasurementProtocol> protocols;
    if (s.empty()) {
      protocols.emplace_back();
    } else {
      for (int m : s.observables) {
        const std::vector<MeasurementProtocol>& sub =
            enumerate(induced_scenario(s, m));
        std::vector<size_t> pick(s.outcomes, 0);
        while (true) {
          MeasurementProtocol t;
          t.observable = m;
          for (int a = 0; a < s.outcomes; ++a) t.branches.push_back(sub[pick[a]]);
          protocols.push_back(std::move(t));
          int digit = s.outcomes - 1;
          while (digit >= 0 && ++pick[digit] == sub.size()) {
            pick[digit] = 0;
            --digit;
          }
          if (digit < 0) break;
        }
      }
    }
    return memo.emplace(key, std::move(protocols)).first->second;
  };
  return enumerate(x);
}

std::vector<std::vector<std::pair<int, int>>> protocol_outcomes(
    const MeasurementProtocol& t) {
  std::vector<std::vector<std::pair<int, int>>> paths;
  std::vector<std::pair<int, int>> current;
  const std::function<void(const MeasurementProtocol&)> walk =
      [&](const MeasurementProtocol& node) {
        if (node.observable < 0) {
          paths.push_back(current);
          return;
        }
        for (int a = 0; a < static_cast<int>(node.branches.size()); ++a) {
          current.emplace_back(node.observable, a);
          walk(node.branches[a]);
          current.pop_back();
        }
      };
  walk(t);
  return paths;
}

int marginal_vertex_count(const MarginalScenario& x) {
  long long total = 0;
  for (const auto& c : x.contexts) {
    long long block = 1;
    for (size_t i = 0; i < c.size(); ++i) block *= x.outcomes;
    total += block;
  }
  if (x.contexts.empty()) total = 1;  // empty scenario: the trivial event
  if (total > std::numeric_limits<int>::max())
    throw std::length_error("marginal scenario vertex count overflows");
  return static_cast<int>(total);
}

int marginal_vertex_index(const MarginalScenario& x, int context_index,
                          const std::vector<int>& assignment) {
  if (context_index < 0 || context_index >= static_cast<int>(x.contexts.size()))
    throw std::out_of_range("marginal vertex: bad context index");
  const auto& c = x.contexts[context_index];
  if (assignment.size() != c.size())
    throw std::invalid_argument("marginal vertex: assignment arity mismatch");
  int offset = 0;
  for (int k = 0; k < context_index; ++k) {
    int block = 1;
    for (size_t i = 0; i < x.contexts[k].size(); ++i) block *= x.outcomes;
    offset += block;
  }
  int lex = 0;
  for (size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] < 0 || assignment[i] >= x.outcomes)
      throw std::out_of_range("marginal vertex: outcome out of range");
    lex = lex * x.outcomes + assignment[i];
  }
  return offset + lex;
}

ContextualityScenario marginal_to_hypergraph(const MarginalScenario& x,
                                             double protocol_budget) {
  const double total = count_protocols(x);
  if (total > protocol_budget)
    throw std::length_error(
        "marginal_to_hypergraph: scenario has " + std::to_string(total) +
        " measurement protocols, over the budget of " +
        std::to_string(protocol_budget) + "; its edge set is out of reach");

  std::vector<std::string> labels;
  std::map<std::vector<int>, int> context_index;
  for (size_t k = 0; k < x.contexts.size(); ++k) {
    context_index[x.contexts[k]] = static_cast<int>(k);
    const auto& c = x.contexts[k];
    std::vector<int> assignment(c.size(), 0);
    while (true) {
      std::string label;
      for (size_t i = 0; i < c.size(); ++i) {
        if (i > 0) label += ',';
        label += std::to_string(c[i]) + ':' + std::to_string(assignment[i]);
      }
      labels.push_back(label);
      int digit = static_cast<int>(c.size()) - 1;
      while (digit >= 0 && ++assignment[digit] == x.outcomes) {
        assignment[digit] = 0;
        --digit;
      }
      if (digit < 0) break;
    }
  }
  if (x.contexts.empty()) labels.push_back("()");

  std::unordered_map<std::string, std::vector<EdgeEvents>> memo;
  const std::vector<EdgeEvents>& protocol_edges = edge_sets(x, memo);

  std::vector<std::vector<int>> edges;
  for (const EdgeEvents& edge : protocol_edges) {
    std::vector<int> ids;
    for (const Event& event : edge) {
      std::vector<int> observables(event.size());
      std::vector<int> assignment(event.size());
      for (size_t i = 0; i < event.size(); ++i) {
        observables[i] = event[i].first;
        assignment[i] = event[i].second;
      }
      if (x.contexts.empty()) {
        ids.push_back(0);
        continue;
      }
      const auto found = context_index.find(observables);
      if (found == context_index.end())
        throw std::logic_error("protocol leaf does not measure a maximal context");
      ids.push_back(marginal_vertex_index(x, found->second, assignment));
    }
    edges.push_back(std::move(ids));
  }
  return new_scenario(std::move(labels), std::move(edges));
}

MarginalScenario bell_marginal(int parties, int settings, int outcomes) {
  if (parties < 1 || settings < 1)
    throw std::invalid_argument("bell scenario: parties and settings must be >= 1");
  if (outcomes < 2)
    throw std::invalid_argument("bell scenario: outcomes must be >= 2");
  if (bell_vertex_count(parties, settings, outcomes) > 10000)
    throw std::invalid_argument(
        "bell scenario: (settings*outcomes)^parties exceeds the 1e4 vertex guard");

  std::vector<std::vector<int>> contexts;
  std::vector<int> choice(parties, 0);
  while (true) {
    std::vector<int> c(parties);
    for (int i = 0; i < parties; ++i) c[i] = i * settings + choice[i];
    contexts.push_back(std::move(c));
    int digit = parties - 1;
    while (digit >= 0 && ++choice[digit] == settings) {
      choice[digit] = 0;
      --digit;
    }
    if (digit < 0) break;
  }
  return new_marginal_scenario(parties * settings, outcomes, std::move(contexts));
}

long long bell_vertex_count(int parties, int settings, int outcomes) {
  long long total = 1;
  for (int i = 0; i < parties; ++i) {
    total *= static_cast<long long>(settings) * outcomes;
    if (total > 100000000LL) return total;  // already far over any guard
  }
  return total;
}

std::vector<std::string> bell_labels(int parties, int settings, int outcomes) {
  const bool compact = settings <= 10 && outcomes <= 10;
  std::vector<std::string> labels;
  std::vector<int> x(parties, 0);
  while (true) {
    std::vector<int> a(parties, 0);
    while (true) {
      labels.push_back("(" + join_digits(a, compact) + "|" + join_digits(x, compact) + ")");
      int digit = parties - 1;
      while (digit >= 0 && ++a[digit] == outcomes) {
        a[digit] = 0;
        --digit;
      }
      if (digit < 0) break;
    }
    int digit = parties - 1;
    while (digit >= 0 && ++x[digit] == settings) {
      x[digit] = 0;
      --digit;
    }
    if (digit < 0) break;
  }
  return labels;
}

int bell_vertex_index(int parties, int settings, int outcomes,
                      const std::vector<int>& settings_choice,
                      const std::vector<int>& outcomes_choice) {
  if (static_cast<int>(settings_choice.size()) != parties ||
      static_cast<int>(outcomes_choice.size()) != parties)
    throw std::invalid_argument("bell vertex: wrong arity");
  long long x = 0, a = 0, block = 1;
  for (int i = 0; i < parties; ++i) {
    if (settings_choice[i] < 0 || settings_choice[i] >= settings ||
        outcomes_choice[i] < 0 || outcomes_choice[i] >= outcomes)
      throw std::out_of_range("bell vertex: index out of range");
    x = x * settings + settings_choice[i];
    a = a * outcomes + outcomes_choice[i];
    block *= outcomes;
  }
  return static_cast<int>(x * block + a);
}

ContextualityScenario bell_scenario(int parties, int settings, int outcomes,
                                    double protocol_budget) {
  const MarginalScenario marginal = bell_marginal(parties, settings, outcomes);
  ContextualityScenario s = marginal_to_hypergraph(marginal, protocol_budget);
  s.vertices = bell_labels(parties, settings, outcomes);
  return s;
}

bool is_bell_scenario(const ContextualityScenario& s, int parties, int settings,
                      int outcomes) {
  if (bell_vertex_count(parties, settings, outcomes) != s.vertex_count())
    return false;
  try {
    const ContextualityScenario reference = bell_scenario(parties, settings, outcomes);
    return reference.vertices == s.vertices && reference.edges == s.edges;
  } catch (const std::exception&) {
    return false;
  }
}

std::string correlations_to_json(const CorrelationTable& c) {
  nlohmann::json j;
  j["n"] = c.n;
  j["m"] = c.m;
  j["d"] = c.d;
  j["P"] = c.table;
  return j.dump(2);
}

CorrelationTable correlations_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"n", "m", "d", "P"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("correlation json: missing '") + key + "'");
  CorrelationTable c;
  c.n = j["n"].get<int>();
  c.m = j["m"].get<int>();
  c.d = j["d"].get<int>();
  c.table = j["P"].get<std::vector<std::vector<double>>>();
  return c;
}

std::string marginal_to_json(const MarginalScenario& x) {
  const int k = static_cast<int>(x.observables.size());
  for (int i = 0; i < k; ++i)
    if (x.observables[i] != i)
      throw std::invalid_argument(
          "marginal json: observable ids are not contiguous from 0; "
          "induced scenarios cannot be serialized directly");
  nlohmann::json j;
  j["observables"] = k;
  j["contexts"] = x.contexts;
  j["outcomes"] = x.outcomes;
  return j.dump(2);
}

MarginalScenario marginal_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"observables", "contexts", "outcomes"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("marginal json: missing '") + key + "'");
  return new_marginal_scenario(j["observables"].get<int>(),
                               j["outcomes"].get<int>(),
                               j["contexts"].get<std::vector<std::vector<int>>>());
}

ProbabilisticModel model_from_correlations(const CorrelationTable& c,
                                           const ContextualityScenario& s) {
  long long settings_blocks = 1, outcome_blocks = 1;
  for (int i = 0; i < c.n; ++i) {
    settings_blocks *= c.m;
    outcome_blocks *= c.d;
  }
  if (static_cast<long long>(c.table.size()) != settings_blocks)
    throw std::invalid_argument("correlation table: expected " +
                                std::to_string(settings_blocks) + " setting rows");
  for (size_t x = 0; x < c.table.size(); ++x) {
    if (static_cast<long long>(c.table[x].size()) != outcome_blocks)
      throw std::invalid_argument("correlation table: row " + std::to_string(x) +
                                  " has the wrong number of outcomes");
    double sum = 0.0;
    for (double v : c.table[x]) sum += v;
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument(
          "correlation table: conditional distribution for setting row " +
          std::to_string(x) + " sums to " + std::to_string(sum));
  }
  if (!is_bell_scenario(s, c.n, c.m, c.d))
    throw std::invalid_argument(
        "correlation table: scenario is not the matching Bell hypergraph");

  ProbabilisticModel model;
  model.p = Eigen::VectorXd(s.vertex_count());
  for (long long x = 0; x < settings_blocks; ++x)
    for (long long a = 0; a < outcome_blocks; ++a)
      model.p(x * outcome_blocks + a) = c.table[x][a];

  const ValidationReport report = validate_model(s, model, kModelTolExact);
  if (!report.ok)
    throw std::invalid_argument(
        "signalling correlations: edge " + std::to_string(report.worst_edge) +
        " sums " + std::to_string(report.max_edge_residual) + " away from 1");
  return model;
}

}  // namespace ctx
