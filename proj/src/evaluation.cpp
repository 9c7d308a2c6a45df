#include "a4nt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

namespace a4nt {

namespace {

void check_labels(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.empty()) throw std::invalid_argument("f1: empty label lists");
    if (truth.size() != predicted.size())
        throw std::invalid_argument("f1: " + std::to_string(truth.size()) + " true labels vs " +
                                    std::to_string(predicted.size()) + " predictions");
}

ClassScores class_scores(std::span<const int> truth, std::span<const int> predicted, int positive) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == positive, p = predicted[i] == positive;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
    }
    ClassScores s;
    s.precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    s.recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

// Depth-first search over candidate positions. Each candidate word is either
// left unmatched or paired with an unused reference position holding the
// same id, subject to reaching the maximum match count. The first complete
// path prefers extending the current chunk, which is the greedy fallback.
class ChunkSearch {
public:
    ChunkSearch(std::span<const int> cand, std::span<const int> ref) : cand_(cand), ref_(ref) {
        std::map<int, int> cc, rc;
        for (int w : cand) ++cc[w];
        for (int w : ref) ++rc[w];
        for (auto [w, n] : cc) {
            const auto it = rc.find(w);
            const int q = it == rc.end() ? 0 : std::min(n, it->second);
            quota_[w] = q;
            matches_ += q;
        }
        remaining_after_.assign(cand.size(), 0);
        std::map<int, int> seen;
        for (std::size_t i = cand.size(); i-- > 0;) {
            remaining_after_[i] = seen[cand[i]];
            ++seen[cand[i]];
        }
        for (std::size_t j = 0; j < ref.size(); ++j) positions_[ref[j]].push_back(int(j));
        used_.assign(ref.size(), 0);
    }

    int matches() const { return matches_; }

    int run() {
        if (matches_ == 0) return 0;
        dfs(0, -2, 0);
        return best_;
    }

private:
    static constexpr long kNodeBudget = 200000;

    void dfs(std::size_t i, int prev_ref, int chunks) {
        if (chunks >= best_) return;
        if (i == cand_.size()) {
            best_ = chunks;
            return;
        }
        if (++nodes_ > kNodeBudget && best_ != kUnset) return;
        const int w = cand_[i];
        int& q = quota_[w];
        if (q > 0) {
            const auto& pos = positions_[w];
            // Continue the chunk first.
            if (prev_ref >= 0 && std::size_t(prev_ref + 1) < ref_.size() && ref_[std::size_t(prev_ref + 1)] == w &&
                !used_[std::size_t(prev_ref + 1)])
                take(i, prev_ref + 1, chunks, q);
            for (int j : pos) {
                if (used_[std::size_t(j)] || j == prev_ref + 1) continue;
                take(i, j, chunks + 1, q);
            }
        }
        if (remaining_after_[i] >= q) dfs(i + 1, -2, chunks);
    }

    void take(std::size_t i, int j, int chunks, int& q) {
        used_[std::size_t(j)] = 1;
        --q;
        dfs(i + 1, j, chunks);
        ++q;
        used_[std::size_t(j)] = 0;
    }

    static constexpr int kUnset = 1 << 30;
    std::span<const int> cand_, ref_;
    std::map<int, int> quota_;
    std::map<int, std::vector<int>> positions_;
    std::vector<int> remaining_after_;
    std::vector<char> used_;
    int matches_ = 0;
    int best_ = kUnset;
    long nodes_ = 0;
};

}  // namespace

double f1_score(std::span<const int> truth, std::span<const int> predicted, int positive) {
    check_labels(truth, predicted);
    return class_scores(truth, predicted, positive).f1;
}

F1Report f1_report(std::span<const int> truth, std::span<const int> predicted) {
    check_labels(truth, predicted);
    F1Report r;
    for (int c = 0; c < 2; ++c) r.per_class[std::size_t(c)] = class_scores(truth, predicted, c);
    r.macro_f1 = (r.per_class[0].f1 + r.per_class[1].f1) / 2;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
    r.accuracy = double(correct) / double(truth.size());
    return r;
}

MeteorAlignment meteor_alignment(std::span<const int> candidate, std::span<const int> reference) {
    if (candidate.empty() || reference.empty()) throw std::invalid_argument("meteor_proxy: empty sentence");
    ChunkSearch search(candidate, reference);
    MeteorAlignment a;
    a.matches = search.matches();
    if (a.matches == 0) return a;
    a.chunks = search.run();
    a.precision = double(a.matches) / double(candidate.size());
    a.recall = double(a.matches) / double(reference.size());
    a.fmean = 10 * a.precision * a.recall / (a.recall + 9 * a.precision);
    const double frag = double(a.chunks) / double(a.matches);
    a.penalty = 0.5 * frag * frag * frag;
    a.score = a.fmean * (1 - a.penalty);
    return a;
}

double meteor_proxy(std::span<const int> candidate, std::span<const int> reference) {
    return meteor_alignment(candidate, reference).score;
}

TransferFn identity_transfer() {
    return [](std::span<const Sentence> sentences, int, std::uint64_t) {
        return std::vector<Sentence>(sentences.begin(), sentences.end());
    };
}

TransferFn translator_transfer(const TranslatorModel& model, TranslateOptions options) {
    return [&model, options](std::span<const Sentence> sentences, int source, std::uint64_t seed) {
        TranslateOptions o = options;
        o.seed = seed;
        return translate_sentences(model, sentences, source, o);
    };
}

Corpus transfer_corpus(const Corpus& corpus, const TransferFn& transfer, std::uint64_t seed) {
    Corpus out = corpus;
    for (int c = 0; c < 2; ++c) {
        std::vector<Sentence> inputs;
        for (const auto& d : corpus.documents)
            if (d.label == c) inputs.insert(inputs.end(), d.sentences.begin(), d.sentences.end());
        if (inputs.empty()) continue;
        const auto outputs = transfer(inputs, c, seed + std::uint64_t(c) * 1000003ULL);
        if (outputs.size() != inputs.size()) throw std::logic_error("transfer returned a different sentence count");
        std::size_t k = 0;
        for (auto& d : out.documents)
            if (d.label == c)
                for (auto& s : d.sentences) s = outputs[k++];
    }
    return out;
}

std::vector<std::vector<ClassProbabilities>> corpus_log_probs(const ClassifierModel& classifier,
                                                              const Corpus& corpus) {
    std::vector<Sentence> all;
    for (const auto& d : corpus.documents) all.insert(all.end(), d.sentences.begin(), d.sentences.end());
    const auto lps = sentence_log_probs(classifier, all);
    std::vector<std::vector<ClassProbabilities>> out;
    std::size_t k = 0;
    for (const auto& d : corpus.documents) {
        out.emplace_back(lps.begin() + std::ptrdiff_t(k), lps.begin() + std::ptrdiff_t(k + d.sentences.size()));
        k += d.sentences.size();
    }
    return out;
}

EvalMetrics score_transfer(const ClassifierModel& classifier, const Corpus& input, const Corpus& output,
                           DocumentAggregation aggregation) {
    if (input.documents.size() != output.documents.size())
        throw std::invalid_argument("score_transfer: corpora have different document counts");
    if (input.documents.empty()) throw std::invalid_argument("score_transfer: empty corpus");
    const auto lps = corpus_log_probs(classifier, output);
    std::vector<int> sent_truth, sent_pred, doc_truth, doc_pred;
    double meteor_sum = 0;
    EvalMetrics m;
    for (std::size_t d = 0; d < input.documents.size(); ++d) {
        const Document& in = input.documents[d];
        const Document& out = output.documents[d];
        if (in.sentences.size() != out.sentences.size())
            throw std::invalid_argument("score_transfer: document " + in.doc_id + " has mismatched sentences");
        for (std::size_t s = 0; s < in.sentences.size(); ++s) {
            sent_truth.push_back(in.label);
            sent_pred.push_back(lps[d][s][1] > lps[d][s][0] ? 1 : 0);
            meteor_sum += meteor_proxy(out.sentences[s], in.sentences[s]);
        }
        doc_truth.push_back(in.label);
        doc_pred.push_back(aggregate_document(lps[d], classifier.task, aggregation).label);
    }
    m.sentence = f1_report(sent_truth, sent_pred);
    m.document = f1_report(doc_truth, doc_pred);
    m.sentences = sent_truth.size();
    m.documents = doc_truth.size();
    m.meteor = meteor_sum / double(m.sentences);
    return m;
}

EvalMetrics evaluate_transfer(const TransferFn& transfer, const ClassifierModel& classifier, const Corpus& corpus,
                              std::uint64_t seed, DocumentAggregation aggregation) {
    return score_transfer(classifier, corpus, transfer_corpus(corpus, transfer, seed), aggregation);
}

const char* to_string(SelectionPolicy p) {
    switch (p) {
        case SelectionPolicy::Min: return "min";
        case SelectionPolicy::Random: return "random";
        case SelectionPolicy::Max: return "max";
    }
    return "?";
}

SelectionPolicy selection_policy_from_string(const std::string& s) {
    if (s == "min") return SelectionPolicy::Min;
    if (s == "random") return SelectionPolicy::Random;
    if (s == "max") return SelectionPolicy::Max;
    throw std::invalid_argument("unknown selection policy '" + s + "' (expected min, random or max)");
}

std::vector<OperatingPoint> operating_points(const TransferFn& transfer, const ClassifierModel& classifier,
                                             const Corpus& corpus, std::size_t k,
                                             std::span<const SelectionPolicy> policies, std::uint64_t seed) {
    if (k == 0) throw std::invalid_argument("operating_points: k must be at least 1");
    std::vector<Corpus> samples;
    for (std::size_t i = 0; i < k; ++i) samples.push_back(transfer_corpus(corpus, transfer, seed + i));

    std::vector<OperatingPoint> out;
    for (SelectionPolicy policy : policies) {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        Corpus chosen = corpus;
        for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
            for (std::size_t s = 0; s < corpus.documents[d].sentences.size(); ++s) {
                const Sentence& ref = corpus.documents[d].sentences[s];
                std::size_t pick = 0;
                if (policy == SelectionPolicy::Random) {
                    pick = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
                } else {
                    double best = 0;
                    for (std::size_t i = 0; i < k; ++i) {
                        const double m = meteor_proxy(samples[i].documents[d].sentences[s], ref);
                        const bool better = policy == SelectionPolicy::Max ? m > best : m < best;
                        if (i == 0 || better) {
                            best = m;
                            pick = i;
                        }
                    }
                }
                chosen.documents[d].sentences[s] = samples[pick].documents[d].sentences[s];
            }
        }
        out.push_back(OperatingPoint{policy, k, score_transfer(classifier, corpus, chosen)});
    }
    return out;
}

PrivacyAnalysis privacy_analysis(const ClassifierModel& classifier, const Corpus& input, const Corpus& output,
                                 std::size_t bins, std::size_t histogram_bins) {
    if (bins == 0 || histogram_bins == 0) throw std::invalid_argument("privacy_analysis: bins must be positive");
    if (input.documents.size() != output.documents.size())
        throw std::invalid_argument("privacy_analysis: corpora have different document counts");
    const auto in_lp = corpus_log_probs(classifier, input);
    const auto out_lp = corpus_log_probs(classifier, output);
    PrivacyAnalysis a;
    for (std::size_t d = 0; d < input.documents.size(); ++d) {
        const Document& doc = input.documents[d];
        const auto src = std::size_t(doc.label);
        for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
            PrivacyRecord r;
            r.doc_id = doc.doc_id;
            r.sent_idx = s;
            r.source = doc.label;
            r.in_score = std::exp(double(in_lp[d][s][src]));
            r.out_score = std::exp(double(out_lp[d][s][src]));
            r.gain = r.in_score - r.out_score;
            r.meteor = meteor_proxy(output.documents[d].sentences[s], doc.sentences[s]);
            a.records.push_back(std::move(r));
        }
    }
    if (a.records.empty()) throw std::invalid_argument("privacy_analysis: empty corpus");

    BinnedCurve& c = a.by_input_score;
    c.count.assign(bins, 0);
    c.mean_out_score.assign(bins, 0);
    c.mean_meteor.assign(bins, 0);
    c.mean_gain.assign(bins, 0);
    for (std::size_t b = 0; b < bins; ++b) {
        c.lower.push_back(double(b) / double(bins));
        c.upper.push_back(double(b + 1) / double(bins));
    }
    Histogram& h = a.gain_histogram;
    h.count.assign(histogram_bins, 0);
    for (std::size_t b = 0; b <= histogram_bins; ++b) h.edges.push_back(-1.0 + 2.0 * double(b) / double(histogram_bins));

    std::vector<double> gains;
    for (const auto& r : a.records) {
        const auto b = std::min(bins - 1, std::size_t(r.in_score * double(bins)));
        ++c.count[b];
        c.mean_out_score[b] += r.out_score;
        c.mean_meteor[b] += r.meteor;
        c.mean_gain[b] += r.gain;
        const auto hb = std::min(histogram_bins - 1, std::size_t((r.gain + 1.0) / 2.0 * double(histogram_bins)));
        ++h.count[hb];
        gains.push_back(r.gain);
    }
    for (std::size_t b = 0; b < bins; ++b) {
        if (c.count[b] == 0) continue;
        c.mean_out_score[b] /= double(c.count[b]);
        c.mean_meteor[b] /= double(c.count[b]);
        c.mean_gain[b] /= double(c.count[b]);
    }
    std::sort(gains.begin(), gains.end());
    const std::size_t n = gains.size();
    a.median_gain = n % 2 ? gains[n / 2] : (gains[n / 2 - 1] + gains[n / 2]) / 2;
    double total = 0;
    for (double g : gains) total += g;
    a.mean_gain = total / double(n);
    return a;
}

PrivacyAnalysis privacy_analysis(const TransferFn& transfer, const ClassifierModel& classifier, const Corpus& corpus,
                                 std::uint64_t seed, std::size_t bins) {
    return privacy_analysis(classifier, corpus, transfer_corpus(corpus, transfer, seed), bins);
}

HoldoutResult holdout_evaluation(std::span<const ClassifierModel> ensemble, std::span<const std::string> names,
                                 const Corpus& original, const Corpus& transferred) {
    if (ensemble.empty()) throw std::invalid_argument("holdout_evaluation: empty ensemble");
    if (names.size() != ensemble.size()) throw std::invalid_argument("holdout_evaluation: one name per classifier");
    HoldoutResult r;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        HoldoutRow row;
        row.name = names[i];
        row.original_f1 = score_transfer(ensemble[i], original, original).document.macro_f1;
        row.transferred_f1 = score_transfer(ensemble[i], original, transferred).document.macro_f1;
        r.mean_original += row.original_f1;
        r.mean_transferred += row.transferred_f1;
        r.max_transferred = std::max(r.max_transferred, row.transferred_f1);
        r.rows.push_back(std::move(row));
    }
    r.mean_original /= double(ensemble.size());
    r.mean_transferred /= double(ensemble.size());
    return r;
}

void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, OperatingPoint>>& rows) {
    out << "model,policy,sentence_f1,doc_f1,meteor\n";
    for (const auto& [model, p] : rows)
        out << model << ',' << to_string(p.policy) << ',' << p.metrics.sentence.macro_f1 << ','
            << p.metrics.document.macro_f1 << ',' << p.metrics.meteor << '\n';
}

void write_privacy_records_csv(std::ostream& out, const std::vector<PrivacyRecord>& records) {
    out << "doc_id,sent_idx,in_score,out_score,gain,meteor\n";
    for (const auto& r : records)
        out << r.doc_id << ',' << r.sent_idx << ',' << r.in_score << ',' << r.out_score << ',' << r.gain << ','
            << r.meteor << '\n';
}

void write_binned_curve_csv(std::ostream& out, const BinnedCurve& c) {
    out << "bin_lower,bin_upper,count,mean_out_score,mean_meteor,mean_gain\n";
    for (std::size_t b = 0; b < c.count.size(); ++b)
        out << c.lower[b] << ',' << c.upper[b] << ',' << c.count[b] << ',' << c.mean_out_score[b] << ','
            << c.mean_meteor[b] << ',' << c.mean_gain[b] << '\n';
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
    out << "gain_lower,gain_upper,count\n";
    for (std::size_t b = 0; b < h.count.size(); ++b)
        out << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.count[b] << '\n';
}

void write_holdout_csv(std::ostream& out, const HoldoutResult& r) {
    out << "classifier,original_doc_f1,transferred_doc_f1\n";
    for (const auto& row : r.rows) out << row.name << ',' << row.original_f1 << ',' << row.transferred_f1 << '\n';
    out << "mean," << r.mean_original << ',' << r.mean_transferred << '\n';
}

}  // namespace a4nt
