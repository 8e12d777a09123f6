#include "finkg/retriever.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <json.hpp>

#include "finkg/errors.hpp"

namespace finkg {
namespace {

std::set<std::string> lower_words(std::string_view text) {
  std::set<std::string> out;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) != 0) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      out.insert(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.insert(std::move(current));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Uniform double in [0, 1) from the top 53 bits.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void check_input(const MlpModel& m, std::span<const double> x) {
  if (x.size() != m.input_dim) {
    throw DimensionMismatch("model expects " + std::to_string(m.input_dim) + " features, got " +
                            std::to_string(x.size()));
  }
}

// Numeric tokens of a gold fact: runs of digits with grouping commas and a
// decimal point, parsed exactly.
std::vector<Decimal> numeric_tokens(std::string_view text) {
  std::vector<Decimal> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::string digits;
    while (j < text.size()) {
      const char c = text[j];
      const bool next_digit = j + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[j + 1]));
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits.push_back(c);
      } else if (c == ',' && next_digit) {
      } else if (c == '.' && next_digit) {
        digits.push_back(c);
      } else {
        break;
      }
      ++j;
    }
    if (auto d = Decimal::parse(digits)) out.push_back(*d);
    i = j;
  }
  return out;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr, long step) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * grads[i];
    state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * grads[i] * grads[i];
    params[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + kEps);
  }
}

}  // namespace

// --------------------------------------------------------------- features

std::vector<double> FeatureVector::flatten() const {
  std::vector<double> out;
  out.reserve(q_emb.values.size() + t_emb.values.size() + kScalarCount);
  out.insert(out.end(), q_emb.values.begin(), q_emb.values.end());
  out.insert(out.end(), t_emb.values.begin(), t_emb.values.end());
  out.push_back(cos_sim);
  out.push_back(temporal_distance / kTemporalDistanceCap);
  out.push_back(temporal_missing);
  out.push_back(metric_overlap);
  out.push_back(company_match);
  out.push_back(unit_is_percent);
  return out;
}

std::optional<int> question_year(std::string_view question) {
  auto years = find_years(question);
  if (years.empty()) return std::nullopt;
  return years.front();
}

double metric_overlap(std::string_view metric_type, std::string_view question) {
  std::set<std::string> metric_tokens;
  std::string current;
  for (char c : metric_type) {
    if (c == '_') {
      if (!current.empty()) metric_tokens.insert(lower(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) metric_tokens.insert(lower(current));
  const auto question_tokens = lower_words(question);

  std::size_t intersection = 0;
  for (const auto& t : metric_tokens) intersection += question_tokens.count(t);
  const auto union_size = metric_tokens.size() + question_tokens.size() - intersection;
  return union_size == 0 ? 0.0 : static_cast<double>(intersection) / static_cast<double>(union_size);
}

FeatureVector build_features(const QuestionRecord& question, const Triplet& triplet, EmbeddingProvider& provider) {
  FeatureVector f;
  f.q_emb = embed(question.text, provider);
  f.t_emb = embed(triplet_embedding_text(triplet), provider);
  f.cos_sim = cosine(f.q_emb, f.t_emb);

  const auto q_year = question_year(question.text);
  if (q_year && triplet.period.year) {
    f.temporal_distance = std::min<double>(std::abs(*q_year - *triplet.period.year), kTemporalDistanceCap);
    f.temporal_missing = 0.0;
  } else {
    f.temporal_distance = kTemporalDistanceCap;
    f.temporal_missing = 1.0;
  }
  f.metric_overlap = metric_overlap(triplet.metric_type, question.text);
  f.company_match =
      triplet.company && !triplet.company->empty() && lower(question.text).find(lower(*triplet.company)) != std::string::npos
          ? 1.0
          : 0.0;
  f.unit_is_percent = triplet.unit == "percent" ? 1.0 : 0.0;
  return f;
}

// -------------------------------------------------------------------- MLP

MlpModel MlpModel::zeros(std::size_t input_dim, std::size_t hidden_size) {
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden_size = hidden_size;
  m.w1.assign(input_dim * hidden_size, 0.0);
  m.b1.assign(hidden_size, 0.0);
  m.w2.assign(hidden_size, 0.0);
  return m;
}

bool MlpModel::consistent() const {
  if (w1.size() != input_dim * hidden_size || b1.size() != hidden_size || w2.size() != hidden_size) return false;
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(w1.begin(), w1.end(), finite) && std::all_of(b1.begin(), b1.end(), finite) &&
         std::all_of(w2.begin(), w2.end(), finite) && std::isfinite(b2);
}

std::string MlpModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "finkg-mlp-v1";
  j["input_dim"] = input_dim;
  j["hidden_size"] = hidden_size;
  j["seed"] = seed;
  j["provider_tag"] = provider_tag;
  j["w1"] = w1;
  j["b1"] = b1;
  j["w2"] = w2;
  j["b2"] = b2;
  return j.dump();
}

MlpModel MlpModel::from_json(std::string_view text, std::optional<std::size_t> expected_input_dim) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError("model file is not a JSON object");
  MlpModel m;
  try {
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.hidden_size = j.at("hidden_size").get<std::size_t>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.provider_tag = j.value("provider_tag", "");
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  if (!m.consistent()) throw DimensionMismatch("model weights disagree with declared dimensions");
  if (expected_input_dim && *expected_input_dim != m.input_dim) {
    throw DimensionMismatch("model input_dim " + std::to_string(m.input_dim) + " but features have " +
                            std::to_string(*expected_input_dim));
  }
  return m;
}

double mlp_logit(const MlpModel& m, std::span<const double> x) {
  check_input(m, x);
  double z = m.b2;
  for (std::size_t j = 0; j < m.hidden_size; ++j) {
    double a = m.b1[j];
    const double* row = m.w1.data() + j * m.input_dim;
    for (std::size_t i = 0; i < m.input_dim; ++i) a += row[i] * x[i];
    if (a > 0.0) z += m.w2[j] * a;
  }
  return z;
}

double mlp_forward(const MlpModel& m, std::span<const double> x) {
  // Saturated sigmoids round to 0 or 1 in double; keep the open interval.
  return std::clamp(sigmoid(mlp_logit(m, x)), std::numeric_limits<double>::denorm_min(),
                    std::nextafter(1.0, 0.0));
}

double bce_loss(std::span<const double> scores, std::span<const int> labels, double positive_weight) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw LengthMismatch(std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], kScoreClamp, 1.0 - kScoreClamp);
    const double y = labels[i];
    total += -(positive_weight * y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
  }
  return total / static_cast<double>(scores.size());
}

double loss_and_gradients(const MlpModel& m, std::span<const std::vector<double>> inputs, std::span<const int> labels,
                          double positive_weight, MlpGradients* grads) {
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw LengthMismatch(std::to_string(inputs.size()) + " inputs vs " + std::to_string(labels.size()) + " labels");
  }
  if (grads != nullptr) {
    grads->w1.assign(m.w1.size(), 0.0);
    grads->b1.assign(m.b1.size(), 0.0);
    grads->w2.assign(m.w2.size(), 0.0);
    grads->b2 = 0.0;
  }
  const double n = static_cast<double>(inputs.size());
  std::vector<double> pre(m.hidden_size);
  double total = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& x = inputs[k];
    check_input(m, x);
    double z = m.b2;
    for (std::size_t j = 0; j < m.hidden_size; ++j) {
      double a = m.b1[j];
      const double* row = m.w1.data() + j * m.input_dim;
      for (std::size_t i = 0; i < m.input_dim; ++i) a += row[i] * x[i];
      pre[j] = a;
      if (a > 0.0) z += m.w2[j] * a;
    }
    const double s = sigmoid(z);
    const double y = labels[k];
    const double sc = std::clamp(s, kScoreClamp, 1.0 - kScoreClamp);
    total += -(positive_weight * y * std::log(sc) + (1.0 - y) * std::log(1.0 - sc));
    if (grads == nullptr) continue;

    // Zero gradient where the clamp is active.
    const bool clamped = s < kScoreClamp || s > 1.0 - kScoreClamp;
    const double dz = clamped ? 0.0 : (-positive_weight * y * (1.0 - s) + (1.0 - y) * s) / n;
    grads->b2 += dz;
    for (std::size_t j = 0; j < m.hidden_size; ++j) {
      if (pre[j] <= 0.0) continue;
      grads->w2[j] += dz * pre[j];
      const double da = dz * m.w2[j];
      grads->b1[j] += da;
      double* grow = grads->w1.data() + j * m.input_dim;
      for (std::size_t i = 0; i < m.input_dim; ++i) grow[i] += da * x[i];
    }
  }
  return total / n;
}

// --------------------------------------------------------------- training

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs <= 0) throw ConfigError("epochs must be > 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be > 0");
  if (seed == 0) throw ConfigError("seed must be > 0");
  if (hidden_size <= 0) throw ConfigError("hidden_size must be > 0");
  if (!(positive_weight > 0.0)) throw ConfigError("positive_weight must be > 0");
}

double balanced_positive_weight(std::span<const LabeledExample> data) {
  std::size_t pos = 0;
  for (const auto& e : data) pos += e.label == 1 ? 1 : 0;
  if (pos == 0 || pos == data.size()) return 1.0;
  return static_cast<double>(data.size() - pos) / static_cast<double>(pos);
}

TrainResult train(std::span<const LabeledExample> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw DegenerateData("no training examples");
  std::size_t positives = 0;
  const auto input_dim = data.front().features.size();
  for (const auto& e : data) {
    if (e.features.size() != input_dim) throw DimensionMismatch("training examples differ in feature length");
    positives += e.label == 1 ? 1 : 0;
  }
  if (positives == 0 || positives == data.size()) throw DegenerateData("training data contains a single class");

  std::mt19937_64 rng(cfg.seed);
  auto model = MlpModel::zeros(input_dim, static_cast<std::size_t>(cfg.hidden_size));
  model.seed = cfg.seed;
  const double limit1 = std::sqrt(6.0 / static_cast<double>(input_dim + model.hidden_size));
  const double limit2 = std::sqrt(6.0 / static_cast<double>(model.hidden_size + 1));
  for (auto& w : model.w1) w = (2.0 * unit_uniform(rng) - 1.0) * limit1;
  for (auto& w : model.w2) w = (2.0 * unit_uniform(rng) - 1.0) * limit2;

  AdamState s_w1(model.w1.size()), s_b1(model.b1.size()), s_w2(model.w2.size()), s_b2(1);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  long step = 0;
  std::vector<std::vector<double>> batch_x;
  std::vector<int> batch_y;
  MlpGradients g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch_x.clear();
      batch_y.clear();
      for (auto k = start; k < end; ++k) {
        batch_x.push_back(data[order[k]].features);
        batch_y.push_back(data[order[k]].label);
      }
      const double loss = loss_and_gradients(model, batch_x, batch_y, cfg.positive_weight, &g);
      epoch_loss += loss * static_cast<double>(end - start);
      ++step;
      adam_step(model.w1, g.w1, s_w1, cfg.learning_rate, step);
      adam_step(model.b1, g.b1, s_b1, cfg.learning_rate, step);
      adam_step(model.w2, g.w2, s_w2, cfg.learning_rate, step);
      adam_step(std::span<double>(&model.b2, 1), std::span<const double>(&g.b2, 1), s_b2, cfg.learning_rate, step);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  result.model = std::move(model);
  return result;
}

// --------------------------------------------------------------- labeling

std::vector<LabeledTriplet> label_triplets(const FinDocument& doc, std::span<const Triplet> triplets) {
  struct Fact {
    std::vector<Decimal> numbers;
    std::vector<int> years;
  };
  std::vector<Fact> facts;
  for (const auto& text : doc.question.gold_inds) facts.push_back({numeric_tokens(text), find_years(text)});

  std::vector<LabeledTriplet> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) {
    const auto magnitude = t.value.abs();
    int label = 0;
    for (const auto& fact : facts) {
      const bool value_hit = std::find(fact.numbers.begin(), fact.numbers.end(), magnitude) != fact.numbers.end();
      if (!value_hit) continue;
      const bool year_ok = !t.period.year || fact.years.empty() ||
                           std::find(fact.years.begin(), fact.years.end(), *t.period.year) != fact.years.end();
      if (year_ok) {
        label = 1;
        break;
      }
    }
    out.push_back({t, label});
  }
  return out;
}

// -------------------------------------------------------------- filtering

std::vector<ScoredTriplet> select_topk(std::vector<ScoredTriplet> scored, std::size_t k) {
  std::sort(scored.begin(), scored.end(), [](const ScoredTriplet& a, const ScoredTriplet& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.triplet.triplet_id < b.triplet.triplet_id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

std::vector<ScoredTriplet> score_triplets(const QuestionRecord& question, std::span<const Triplet> triplets,
                                          const MlpModel& model, EmbeddingProvider& provider) {
  std::vector<ScoredTriplet> scored;
  scored.reserve(triplets.size());
  for (const auto& t : triplets) {
    const auto features = build_features(question, t, provider).flatten();
    scored.push_back({t, mlp_forward(model, features)});
  }
  return scored;
}

std::vector<ScoredTriplet> filter_topk(const QuestionRecord& question, std::span<const Triplet> triplets,
                                       const MlpModel& model, EmbeddingProvider& provider, std::size_t k) {
  if (k == 0) return {};
  return select_topk(score_triplets(question, triplets, model, provider), k);
}

std::vector<ScoredTriplet> filter_threshold(const QuestionRecord& question, std::span<const Triplet> triplets,
                                            const MlpModel& model, EmbeddingProvider& provider, double threshold) {
  auto scored = score_triplets(question, triplets, model, provider);
  std::erase_if(scored, [threshold](const ScoredTriplet& s) { return s.score < threshold; });
  const auto n = scored.size();
  return select_topk(std::move(scored), n);
}

}  // namespace finkg
