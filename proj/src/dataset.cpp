#include "sshmc/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "sshmc/errors.hpp"
#include "sshmc/rng.hpp"

namespace sshmc {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(s);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_value(const std::string& token, const std::string& where) {
    const std::string t = trim(token);
    if (t.empty() || t == "?") return kMissing;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') {
        throw ParseError(where + ": bad numeric value '" + t + "'");
    }
    return v;
}

std::string loc(const std::string& path, std::size_t lineno) {
    return path + ":" + std::to_string(lineno);
}

Matrix load_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open features file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) {
        throw ParseError(path.string() + ": empty features file");
    }
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t dims = split_on(line, ',').size();
    if (dims == 0) throw ParseError(loc(path.string(), lineno) + ": empty header");

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_on(line, ',');
        if (fields.size() != dims) {
            throw ParseError(loc(path.string(), lineno) + ": expected " + std::to_string(dims) +
                             " fields, got " + std::to_string(fields.size()));
        }
        for (const auto& f : fields) values.push_back(parse_value(f, loc(path.string(), lineno)));
        ++rows;
    }
    Matrix m(rows, dims);
    std::copy(values.begin(), values.end(), m.row(0).data());
    return m;
}

std::vector<LabelVector> load_labels_txt(const std::filesystem::path& path,
                                         const Hierarchy& h, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open labels file: " + path.string());
    std::vector<LabelVector> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        LabelVector named(h.size(), 0);
        bool any = false;
        for (const auto& tok : split_on(line, ';')) {
            const std::string name = trim(tok);
            if (name.empty()) continue;
            const auto id = h.find(name);
            if (!id) {
                throw UnknownLabelError(loc(path.string(), lineno) + ": unknown label '" +
                                        name + "'");
            }
            named[static_cast<std::size_t>(*id)] = 1;
            any = true;
        }
        if (!any) {
            throw ParseError(loc(path.string(), lineno) +
                             ": instance carries no labels (at least one is required)");
        }
        LabelVector closed = h.ancestor_closure(named);
        if (stats && closed != named) ++stats->rows_closed;
        rows.push_back(std::move(closed));
    }
    return rows;
}

void format_double(std::string& out, double v) {
    if (std::isnan(v)) {
        out += '?';
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace

Dataset load_native(const std::filesystem::path& features_path,
                    const std::filesystem::path& labels_path,
                    const std::filesystem::path& hierarchy_path, LoadStats* stats) {
    auto hierarchy = std::make_shared<Hierarchy>(Hierarchy::load(hierarchy_path));
    return load_native(features_path, labels_path, std::move(hierarchy), stats);
}

Dataset load_native(const std::filesystem::path& features_path,
                    const std::filesystem::path& labels_path,
                    std::shared_ptr<const Hierarchy> hierarchy, LoadStats* stats) {
    Dataset ds;
    ds.hierarchy = std::move(hierarchy);
    ds.features = load_features_csv(features_path);
    ds.labels = load_labels_txt(labels_path, *ds.hierarchy, stats);
    if (ds.labels.size() != ds.features.rows()) {
        throw ParseError(labels_path.string() + ": " + std::to_string(ds.labels.size()) +
                         " label rows but " + std::to_string(ds.features.rows()) +
                         " feature rows");
    }
    return ds;
}

Dataset load_clus_arff(const std::filesystem::path& path, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open ARFF file: " + path.string());

    std::string line;
    std::size_t lineno = 0;
    std::size_t numeric_attrs = 0;
    bool have_class = false;
    bool in_data = false;
    std::shared_ptr<Hierarchy> hierarchy;
    std::vector<double> values;
    std::vector<LabelVector> labels;
    std::size_t rows = 0;

    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '%') continue;
        if (!in_data) {
            const std::string lt = lower(t);
            if (lt.rfind("@relation", 0) == 0) continue;
            if (lt.rfind("@data", 0) == 0) {
                if (!have_class) {
                    throw ParseError(loc(path.string(), lineno) +
                                     ": @data before a hierarchical class attribute");
                }
                in_data = true;
                continue;
            }
            if (lt.rfind("@attribute", 0) == 0) {
                std::istringstream ss(t);
                std::string kw, name, type;
                ss >> kw >> name >> type;
                const std::string ltype = lower(type);
                if (ltype == "hierarchical") {
                    if (have_class) {
                        throw ParseError(loc(path.string(), lineno) +
                                         ": multiple hierarchical class attributes");
                    }
                    std::string rest;
                    std::getline(ss, rest);
                    std::vector<HierarchyLine> lines;
                    for (const auto& tok : split_on(trim(rest), ',')) {
                        const std::string edge = trim(tok);
                        if (edge.empty()) continue;
                        const auto slash = edge.find('/');
                        if (slash == std::string::npos) {
                            lines.push_back({"", edge});
                        } else {
                            std::string parent = edge.substr(0, slash);
                            std::string child = edge.substr(slash + 1);
                            if (parent == "root") parent.clear();
                            if (child.empty()) {
                                throw ParseError(loc(path.string(), lineno) +
                                                 ": bad edge token '" + edge + "'");
                            }
                            lines.push_back({std::move(parent), std::move(child)});
                        }
                    }
                    if (lines.empty()) {
                        throw ParseError(loc(path.string(), lineno) +
                                         ": hierarchical attribute lists no edges");
                    }
                    hierarchy = std::make_shared<Hierarchy>(Hierarchy::from_lines(lines));
                    have_class = true;
                } else if (ltype == "numeric" || ltype == "real" || ltype == "integer") {
                    if (have_class) {
                        throw ParseError(loc(path.string(), lineno) +
                                         ": attributes after the class attribute");
                    }
                    ++numeric_attrs;
                } else {
                    throw ParseError(loc(path.string(), lineno) + ": unsupported attribute type '" +
                                     type + "' (only numeric attributes are supported)");
                }
                continue;
            }
            throw ParseError(loc(path.string(), lineno) + ": unexpected header line");
        }

        if (t[0] == '{') {
            throw ParseError(loc(path.string(), lineno) + ": sparse ARFF rows are not supported");
        }
        const auto fields = split_on(t, ',');
        if (fields.size() != numeric_attrs + 1) {
            throw ParseError(loc(path.string(), lineno) + ": expected " +
                             std::to_string(numeric_attrs + 1) + " fields, got " +
                             std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < numeric_attrs; ++i) {
            values.push_back(parse_value(fields[i], loc(path.string(), lineno)));
        }
        LabelVector named(hierarchy->size(), 0);
        bool any = false;
        for (const auto& ref : split_on(trim(fields.back()), '@')) {
            const std::string name = trim(ref);
            if (name.empty()) continue;
            const auto id = hierarchy->find(name);
            if (!id) {
                throw UnknownLabelError(loc(path.string(), lineno) + ": unknown label '" + name +
                                        "'");
            }
            named[static_cast<std::size_t>(*id)] = 1;
            any = true;
        }
        if (!any) {
            throw ParseError(loc(path.string(), lineno) +
                             ": instance carries no labels (at least one is required)");
        }
        LabelVector closed = hierarchy->ancestor_closure(named);
        if (stats && closed != named) ++stats->rows_closed;
        labels.push_back(std::move(closed));
        ++rows;
    }
    if (!in_data) throw ParseError(path.string() + ": missing @data section");

    Dataset ds;
    ds.hierarchy = hierarchy;
    ds.features = Matrix(rows, numeric_attrs);
    if (rows > 0 && numeric_attrs > 0) {
        std::copy(values.begin(), values.end(), ds.features.row(0).data());
    }
    ds.labels = std::move(labels);
    return ds;
}

void save_native(const Dataset& ds, const std::filesystem::path& features_path,
                 const std::filesystem::path& labels_path) {
    const Hierarchy& h = *ds.hierarchy;
    {
        std::ofstream out(features_path);
        if (!out) throw Error("cannot write features file: " + features_path.string());
        std::string buf;
        for (std::size_t c = 0; c < ds.dims(); ++c) {
            if (c) buf += ',';
            buf += 'f';
            buf += std::to_string(c);
        }
        buf += '\n';
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            for (std::size_t c = 0; c < ds.dims(); ++c) {
                if (c) buf += ',';
                format_double(buf, ds.features(r, c));
            }
            buf += '\n';
        }
        out << buf;
    }
    {
        std::ofstream out(labels_path);
        if (!out) throw Error("cannot write labels file: " + labels_path.string());
        for (const auto& row : ds.labels) {
            // Most specific labels: set bits with no set descendant.
            bool first = true;
            for (std::size_t l = 0; l < row.size(); ++l) {
                if (!row[l]) continue;
                bool specific = true;
                for (NodeId d : h.descendants(static_cast<NodeId>(l))) {
                    if (row[static_cast<std::size_t>(d)]) {
                        specific = false;
                        break;
                    }
                }
                if (!specific) continue;
                if (!first) out << ';';
                out << h.name(static_cast<NodeId>(l));
                first = false;
            }
            out << '\n';
        }
    }
}

PruneResult prune_rare_nodes(const Dataset& train, const std::vector<Dataset>& others,
                             int min_count) {
    if (min_count < 1) throw Error("prune_rare_nodes: min_count must be >= 1");
    const Hierarchy& h = *train.hierarchy;
    for (const auto& other : others) {
        if (!other.hierarchy->same_structure(h)) {
            throw Error("prune_rare_nodes: datasets do not share one hierarchy");
        }
    }

    const std::size_t n = h.size();
    std::vector<std::size_t> counts(n, 0);
    for (const auto& row : train.labels) {
        for (std::size_t l = 0; l < n; ++l) {
            if (row[l]) ++counts[l];
        }
    }
    std::vector<bool> keep(n, false);
    std::size_t kept = 0;
    for (std::size_t l = 0; l < n; ++l) {
        keep[l] = counts[l] >= static_cast<std::size_t>(min_count);
        kept += keep[l] ? 1 : 0;
    }
    if (kept == 0) throw EmptyHierarchyError("prune_rare_nodes: all nodes pruned");

    // Nearest surviving ancestors of a pruned node, through pruned chains.
    std::vector<std::set<NodeId>> resolved(n);
    for (NodeId l : h.topo_order()) {
        std::set<NodeId> acc;
        for (NodeId p : h.parents(l)) {
            if (p == kVirtualRoot) {
                acc.insert(kVirtualRoot);
            } else if (keep[static_cast<std::size_t>(p)]) {
                acc.insert(p);
            } else {
                acc.insert(resolved[static_cast<std::size_t>(p)].begin(),
                           resolved[static_cast<std::size_t>(p)].end());
            }
        }
        resolved[static_cast<std::size_t>(l)] = std::move(acc);
    }

    std::vector<HierarchyLine> lines;
    for (std::size_t l = 0; l < n; ++l) {
        if (!keep[l]) continue;
        for (NodeId p : resolved[l]) {
            if (p == kVirtualRoot) {
                lines.push_back({"", h.name(static_cast<NodeId>(l))});
            } else {
                lines.push_back({h.name(p), h.name(static_cast<NodeId>(l))});
            }
        }
    }
    auto pruned = std::make_shared<Hierarchy>(Hierarchy::from_lines(lines));

    std::vector<NodeId> new_of_old(n, kVirtualRoot);
    for (std::size_t l = 0; l < n; ++l) {
        if (keep[l]) new_of_old[l] = pruned->id_of(h.name(static_cast<NodeId>(l)));
    }

    auto project = [&](const Dataset& ds) {
        Dataset out;
        out.hierarchy = pruned;
        out.features = ds.features;
        out.row_names = ds.row_names;
        out.labels.reserve(ds.labels.size());
        for (const auto& row : ds.labels) {
            LabelVector projected(pruned->size(), 0);
            for (std::size_t l = 0; l < n; ++l) {
                if (row[l] && keep[l]) {
                    projected[static_cast<std::size_t>(new_of_old[l])] = 1;
                }
            }
            out.labels.push_back(std::move(projected));
        }
        return out;
    };

    PruneResult result;
    result.hierarchy = pruned;
    result.datasets.push_back(project(train));
    for (const auto& other : others) result.datasets.push_back(project(other));
    for (std::size_t l = 0; l < n; ++l) {
        if (!keep[l]) result.removed.push_back(h.name(static_cast<NodeId>(l)));
    }
    return result;
}

std::vector<MaskPair> stratified_labeled_split(const Dataset& ds, const SplitSpec& spec) {
    if (spec.labeled_fraction <= 0.0 || spec.labeled_fraction > 1.0) {
        throw Error("stratified_labeled_split: labeled_fraction must be in (0, 1]");
    }
    if (spec.repetitions < 1) {
        throw Error("stratified_labeled_split: repetitions must be >= 1");
    }
    const std::size_t n = ds.rows();
    const std::size_t n_labels = ds.hierarchy ? ds.hierarchy->size() : 0;

    std::vector<MaskPair> result;
    result.reserve(static_cast<std::size_t>(spec.repetitions));
    for (int rep = 0; rep < spec.repetitions; ++rep) {
        MaskPair pair;
        pair.labeled.assign(n, 0);
        pair.unlabeled.assign(n, 0);
        if (spec.labeled_fraction >= 1.0) {
            std::fill(pair.labeled.begin(), pair.labeled.end(), 1);
            result.push_back(std::move(pair));
            continue;
        }
        Rng rng(Rng::derive(spec.seed, "stratified-split", static_cast<std::uint64_t>(rep)));

        const double f = spec.labeled_fraction;
        // Remaining desired positives per (side, label) and side capacities.
        std::vector<std::array<double, 2>> desire(n_labels);
        for (std::size_t l = 0; l < n_labels; ++l) {
            std::size_t count = 0;
            for (const auto& row : ds.labels) count += row[l];
            desire[l] = {f * static_cast<double>(count), (1.0 - f) * static_cast<double>(count)};
        }
        std::array<double, 2> capacity = {f * static_cast<double>(n),
                                          (1.0 - f) * static_cast<double>(n)};

        std::vector<bool> assigned(n, false);
        std::size_t remaining = n;

        auto place = [&](std::size_t row, int side) {
            assigned[row] = true;
            --remaining;
            (side == 0 ? pair.labeled : pair.unlabeled)[row] = 1;
            capacity[static_cast<std::size_t>(side)] -= 1.0;
            for (std::size_t j = 0; j < n_labels; ++j) {
                if (ds.labels[row][j]) desire[j][static_cast<std::size_t>(side)] -= 1.0;
            }
        };
        auto pick_side = [&](std::size_t label) -> int {
            const double dl = desire[label][0];
            const double du = desire[label][1];
            if (dl != du) return dl > du ? 0 : 1;
            if (capacity[0] != capacity[1]) return capacity[0] > capacity[1] ? 0 : 1;
            return static_cast<int>(rng.below(2));
        };

        while (remaining > 0) {
            // Rarest label with unassigned positives.
            std::size_t best_label = n_labels;
            std::size_t best_count = 0;
            for (std::size_t l = 0; l < n_labels; ++l) {
                std::size_t c = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (!assigned[r] && ds.labels[r][l]) ++c;
                }
                if (c > 0 && (best_label == n_labels || c < best_count)) {
                    best_label = l;
                    best_count = c;
                }
            }
            if (best_label == n_labels) {
                // Only label-free rows remain; balance by capacity.
                for (std::size_t r = 0; r < n; ++r) {
                    if (assigned[r]) continue;
                    int side;
                    if (capacity[0] != capacity[1]) {
                        side = capacity[0] > capacity[1] ? 0 : 1;
                    } else {
                        side = static_cast<int>(rng.below(2));
                    }
                    if (capacity[0] <= 0.0 && capacity[1] > 0.0) side = 1;
                    if (capacity[1] <= 0.0 && capacity[0] > 0.0) side = 0;
                    place(r, side);
                }
                break;
            }
            std::vector<std::size_t> rows;
            for (std::size_t r = 0; r < n; ++r) {
                if (!assigned[r] && ds.labels[r][best_label]) rows.push_back(r);
            }
            rng.shuffle(rows);
            for (std::size_t r : rows) place(r, pick_side(best_label));
        }
        result.push_back(std::move(pair));
    }
    return result;
}

ImputeResult impute_missing(const Matrix& train, const std::vector<Matrix>& others) {
    const std::size_t d = train.cols();
    for (const auto& other : others) {
        if (other.cols() != d) {
            throw WidthMismatchError("impute_missing: feature width mismatch");
        }
    }
    ImputeResult result;
    result.column_means.assign(d, 0.0);
    result.all_missing.assign(d, 0);
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < train.rows(); ++r) {
            const double v = train(r, c);
            if (!std::isnan(v)) {
                sum += v;
                ++count;
            }
        }
        if (count == 0) {
            result.column_means[c] = 0.0;
            result.all_missing[c] = 1;
        } else {
            result.column_means[c] = sum / static_cast<double>(count);
        }
    }
    auto apply = [&](const Matrix& m) {
        Matrix out = m;
        for (std::size_t r = 0; r < out.rows(); ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                if (std::isnan(out(r, c))) out(r, c) = result.column_means[c];
            }
        }
        return out;
    };
    result.train = apply(train);
    result.others.reserve(others.size());
    for (const auto& other : others) result.others.push_back(apply(other));
    return result;
}

ArtificialData generate_artificial(std::uint64_t seed) {
    auto hierarchy = std::make_shared<Hierarchy>(Hierarchy::from_edges(
        {{"0", "1"}, {"0", "2"}, {"1", "3"}, {"1", "4"}, {"2", "4"}, {"2", "5"}}, {"0"}));

    // One Gaussian cluster per label configuration; node 4 needs both parents
    // and the last configuration spans two root-to-leaf paths.
    struct Cluster {
        double mx, my;
        std::vector<NodeId> labels;
    };
    const std::vector<Cluster> clusters = {
        {0.0, 0.0, {0, 1, 3}},       {3.0, 0.0, {0, 1, 2, 4}}, {6.0, 0.0, {0, 2, 5}},
        {0.0, 3.0, {0, 1}},          {6.0, 3.0, {0, 2}},       {3.0, 3.0, {0, 1, 2, 3, 5}},
    };
    const double sigma = 0.8;

    auto make_set = [&](const char* stream, std::size_t per_cluster, const char* prefix) {
        Dataset ds;
        ds.hierarchy = hierarchy;
        const std::size_t total = per_cluster * clusters.size();
        ds.features = Matrix(total, 2);
        ds.labels.reserve(total);
        ds.row_names.reserve(total);
        Rng rng(Rng::derive(seed, stream));
        std::size_t r = 0;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            LabelVector bits(hierarchy->size(), 0);
            for (NodeId l : clusters[c].labels) bits[static_cast<std::size_t>(l)] = 1;
            for (std::size_t i = 0; i < per_cluster; ++i, ++r) {
                ds.features(r, 0) = clusters[c].mx + sigma * rng.normal();
                ds.features(r, 1) = clusters[c].my + sigma * rng.normal();
                ds.labels.push_back(bits);
                ds.row_names.push_back(std::string(prefix) + std::to_string(r));
            }
        }
        return ds;
    };

    ArtificialData data;
    data.labeled = make_set("artificial-labeled", 2, "lab_");
    data.unlabeled = make_set("artificial-unlabeled", 55, "unl_");
    data.test = make_set("artificial-test", 50, "tst_");
    return data;
}

Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& row_ids) {
    Dataset out;
    out.hierarchy = ds.hierarchy;
    out.features = Matrix(row_ids.size(), ds.dims());
    out.labels.reserve(ds.labels.empty() ? 0 : row_ids.size());
    out.row_names.reserve(ds.row_names.empty() ? 0 : row_ids.size());
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
        const std::size_t r = row_ids[i];
        for (std::size_t c = 0; c < ds.dims(); ++c) out.features(i, c) = ds.features(r, c);
        if (!ds.labels.empty()) out.labels.push_back(ds.labels[r]);
        if (!ds.row_names.empty()) out.row_names.push_back(ds.row_names[r]);
    }
    return out;
}

Dataset select_rows(const Dataset& ds, const std::vector<std::uint8_t>& mask) {
    std::vector<std::size_t> ids;
    for (std::size_t r = 0; r < mask.size(); ++r) {
        if (mask[r]) ids.push_back(r);
    }
    return select_rows(ds, ids);
}

}  // namespace sshmc
