#include "qfsum/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "qfsum/error.hpp"
#include "qfsum/retrieval.hpp"

namespace qfsum {
namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

// Distinct pronounceable pseudo-word for every index.
std::string PseudoWord(std::size_t n) {
  std::string word;
  do {
    const std::size_t syllable = n % (kConsonants.size() * kVowels.size());
    word.push_back(kConsonants[syllable / kVowels.size()]);
    word.push_back(kVowels[syllable % kVowels.size()]);
    n /= kConsonants.size() * kVowels.size();
  } while (n > 0);
  return word + "x";
}

std::string Capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += i == 0 ? Capitalize(words[i]) : words[i];
  }
  return out + ".";
}

std::size_t Uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusOptions& o) {
  if (o.documents == 0 || o.sentences_per_document == 0 || o.topic_terms < o.query_topic_terms ||
      o.background_terms < o.query_background_terms || o.background_terms == 0) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent synthetic corpus options");
  }
  std::mt19937_64 rng(o.seed);
  std::vector<std::string> background;
  std::vector<std::string> topic;
  for (std::size_t i = 0; i < o.background_terms; ++i) background.push_back(PseudoWord(i));
  for (std::size_t i = 0; i < o.topic_terms; ++i) {
    topic.push_back(PseudoWord(o.background_terms + i));
  }
  std::shuffle(topic.begin(), topic.end(), rng);
  const std::vector<std::string> query_topic(topic.begin(),
                                             topic.begin() + static_cast<long>(o.query_topic_terms));

  const std::size_t total = o.documents * o.sentences_per_document;
  const auto planted = static_cast<std::size_t>(std::llround(o.relevant_fraction * total));
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  SyntheticCorpus corpus;
  corpus.relevant.assign(total, false);
  for (std::size_t i = 0; i < planted; ++i) corpus.relevant[order[i]] = true;

  auto pick = [&](const std::vector<std::string>& pool) {
    return pool[Uniform(rng, 0, pool.size() - 1)];
  };
  std::bernoulli_distribution distractor(o.distractor_rate);

  for (std::size_t d = 0; d < o.documents; ++d) {
    Document doc;
    doc.doc_id = "doc-" + std::to_string(d + 1);
    doc.filename = "synthetic-" + std::to_string(d + 1) + ".txt";
    for (std::size_t s = 0; s < o.sentences_per_document; ++s) {
      const std::size_t ordinal = d * o.sentences_per_document + s;
      std::vector<std::string> words;
      if (corpus.relevant[ordinal]) {
        const auto n_topic = Uniform(rng, 3, 5);
        const auto n_background = Uniform(rng, 4, 7);
        for (std::size_t k = 0; k < n_topic; ++k) words.push_back(pick(topic));
        for (std::size_t k = 0; k < n_background; ++k) words.push_back(pick(background));
      } else {
        const auto n_background = Uniform(rng, 7, 11);
        for (std::size_t k = 0; k < n_background; ++k) words.push_back(pick(background));
        if (distractor(rng)) words.push_back(pick(query_topic));
      }
      std::shuffle(words.begin(), words.end(), rng);
      Sentence sentence{doc.doc_id, s + 1, Join(words)};
      doc.raw_text += sentence.text + "\n";
      doc.sentences.push_back(std::move(sentence));
    }
    corpus.documents.push_back(std::move(doc));
  }

  std::vector<std::string> query_words = query_topic;
  for (std::size_t k = 0; k < o.query_background_terms; ++k) {
    query_words.push_back(pick(background));
  }
  std::shuffle(query_words.begin(), query_words.end(), rng);
  corpus.query = Join(query_words);
  return corpus;
}

std::vector<bool> AlignGold(const std::vector<Document>& documents,
                            const std::vector<GoldLabel>& gold) {
  std::map<std::pair<std::string, std::size_t>, Label> by_key;
  for (const auto& g : gold) by_key[{g.document, g.sentence_index}] = g.label;
  std::vector<bool> relevant;
  for (const auto& d : documents) {
    for (const auto& s : d.sentences) {
      const auto it = by_key.find({d.filename, s.index});
      if (it == by_key.end()) {
        throw Error(ErrorCode::kInvalidArgument, "no gold label for " + d.filename +
                                                     " sentence " + std::to_string(s.index));
      }
      relevant.push_back(it->second == Label::kRelevant);
    }
  }
  return relevant;
}

std::vector<GoldLabel> GoldFromFlags(const std::vector<Document>& documents,
                                     const std::vector<bool>& relevant) {
  std::vector<GoldLabel> gold;
  std::size_t ordinal = 0;
  for (const auto& d : documents) {
    for (const auto& s : d.sentences) {
      gold.push_back({d.filename, s.index,
                      relevant.at(ordinal++) ? Label::kRelevant : Label::kIrrelevant});
    }
  }
  return gold;
}

SimulationRun RunCalSimulation(const std::vector<Document>& documents, const std::string& query,
                               const std::vector<bool>& relevant,
                               const SimulationOptions& options,
                               const ProviderFactory& providers) {
  SessionSettings settings = options.settings;
  settings.max_documents = std::max(settings.max_documents, documents.size());
  Session session("simulation", settings, providers);
  for (const auto& d : documents) session.AddDocument(d);
  if (relevant.size() != session.sentence_count()) {
    throw Error(ErrorCode::kInvalidArgument, "gold labels do not cover the corpus");
  }
  session.Process();

  const auto total_relevant =
      static_cast<std::size_t>(std::count(relevant.begin(), relevant.end(), true));
  SimulationRun run;
  std::size_t found = 0;

  auto review = [&](const Batch& batch) {
    std::vector<LabelInput> labels;
    for (const auto& item : batch.items) {
      const auto& s = session.SentenceAt(item.ordinal);
      const bool rel = relevant[item.ordinal];
      if (rel) ++found;
      labels.push_back({s.doc_id, s.index, rel ? Label::kRelevant : Label::kIrrelevant});
    }
    const auto result = session.SubmitLabels(labels);
    SimulationPoint p;
    p.batch = batch.batch_number;
    p.phase = batch.phase;
    p.shown = session.shown().size();
    p.found = found;
    p.effort = static_cast<double>(p.shown) / static_cast<double>(session.sentence_count());
    p.precision = static_cast<double>(found) / static_cast<double>(p.shown);
    if (total_relevant > 0) {
      p.recall = static_cast<double>(found) / static_cast<double>(total_relevant);
    }
    p.stop_counter = result.stop_counter;
    run.series.push_back(p);
    return result;
  };

  review(session.Search(query));
  while (run.explore_turns < options.max_explore_turns) {
    if (session.shown().size() == session.sentence_count()) {
      run.exhausted = true;
      break;
    }
    const auto outcome = session.Explore();
    ++run.explore_turns;
    const auto result = review(outcome.batch);
    if (result.should_stop && !run.stopped_after_explore_turns) {
      run.stopped_after_explore_turns = run.explore_turns;
      if (options.honor_stop_rule) break;
    }
  }
  if (session.shown().size() == session.sentence_count()) run.exhausted = true;
  return run;
}

double RecallAtEffort(const SimulationRun& run, double effort) {
  double recall = 0.0;
  for (const auto& p : run.series) {
    if (p.effort > effort + 1e-12) break;
    recall = p.recall.value_or(0.0);
  }
  return recall;
}

double StaticVsmRecallAtEffort(const std::vector<Document>& documents, const std::string& query,
                               const std::vector<bool>& relevant, const EmbeddingConfig& config,
                               double effort, const ProviderFactory& providers) {
  std::vector<std::string> texts;
  for (const auto& d : documents) {
    for (const auto& s : d.sentences) texts.push_back(s.text);
  }
  const auto total_relevant =
      static_cast<std::size_t>(std::count(relevant.begin(), relevant.end(), true));
  if (total_relevant == 0) {
    throw Error(ErrorCode::kNoRelevantGold, "gold labels contain no relevant sentence");
  }
  const auto space = EmbeddingSpace::Fit(texts, config, providers);
  const auto ranking = VsmRank(space.Embed(query), space.EmbedAll(texts), {});
  const auto cutoff = static_cast<std::size_t>(
      std::floor(effort * static_cast<double>(texts.size()) + 1e-9));
  std::size_t hits = 0;
  for (std::size_t k = 0; k < std::min(cutoff, ranking.size()); ++k) {
    if (relevant[ranking[k].ordinal]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total_relevant);
}

nlohmann::json RunToJson(const SimulationRun& run) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& p : run.series) {
    series.push_back({{"batch", p.batch},
                      {"effort", p.effort},
                      {"found", p.found},
                      {"phase", ToString(p.phase)},
                      {"precision", p.precision},
                      {"recall", p.recall ? nlohmann::json(*p.recall) : nlohmann::json(nullptr)},
                      {"shown", p.shown},
                      {"stop_counter", p.stop_counter}});
  }
  return {{"exhausted", run.exhausted},
          {"explore_turns", run.explore_turns},
          {"series", series},
          {"stopped_after_explore_turns",
           run.stopped_after_explore_turns ? nlohmann::json(*run.stopped_after_explore_turns)
                                           : nlohmann::json(nullptr)}};
}

std::string RunSeriesCsv(const SimulationRun& run) {
  std::string out = "effort,precision,recall\n";
  for (const auto& p : run.series) {
    out += nlohmann::json(p.effort).dump() + "," + nlohmann::json(p.precision).dump() + "," +
           (p.recall ? nlohmann::json(*p.recall).dump() : std::string()) + "\n";
  }
  return out;
}

}  // namespace qfsum
