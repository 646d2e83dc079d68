#include "covlab/cli.hpp"

#include <algorithm>

namespace covlab::cli {

ConfigNode::ConfigNode(const Json& object, std::string path)
    : object_(object), path_(std::move(path))
{
    if (!object_.is_object()) throw ConfigError((path_.empty() ? std::string("config") : path_) + " must be an object");
}

bool ConfigNode::has(const std::string& key) const { return object_.contains(key); }

const Json* ConfigNode::raw(const std::string& key)
{
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return nullptr;
    return &*it;
}

double ConfigNode::get_real(const std::string& key, double fallback)
{
    const Json* v = raw(key);
    double out = fallback;
    if (v) {
        try {
            out = parse_extended_real(*v);
        } catch (const ConfigError&) {
            throw ConfigError(where(key) + " must be a number");
        }
    }
    resolved_[key] = extended_real(out);
    return out;
}

std::optional<std::size_t> ConfigNode::get_optional_count(const std::string& key)
{
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    const auto out = convert<std::size_t>(*v, key);
    resolved_[key] = out;
    return out;
}

ConfigNode ConfigNode::child(const std::string& key)
{
    const Json* v = raw(key);
    return ConfigNode(v ? *v : Json::object(), where(key));
}

void ConfigNode::adopt(const std::string& key, ConfigNode& child)
{
    child.finish();
    resolved_[key] = child.resolved();
    seen_.insert(key);
}

void ConfigNode::finish() const
{
    std::vector<std::string> unknown;
    for (const auto& [k, v] : object_.items())
        if (!seen_.count(k)) unknown.push_back(where(k));
    if (unknown.empty()) return;
    std::string msg = "unknown config key";
    msg += unknown.size() > 1 ? "s: " : ": ";
    for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : "") + unknown[i];
    throw ConfigError(msg);
}

void set_dotted(Json& root, const std::string& path, Json value)
{
    if (path.empty()) throw ConfigError("empty override key");
    Json* node = &root;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("bad override key: " + path);
        if (!node->is_object()) throw ConfigError("override " + path + " descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = std::move(value);
            return;
        }
        if (!node->contains(key) || (*node)[key].is_null()) (*node)[key] = Json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

void apply_assignment(Json& root, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got " + assignment);
    const std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    set_dotted(root, assignment.substr(0, eq), std::move(value));
}

Eigen::VectorXd parse_point(const Json& j, std::size_t dimension, const std::string& where)
{
    if (j.is_number() && dimension == 1) return Eigen::VectorXd::Constant(1, j.get<double>());
    if (!j.is_array() || j.size() != dimension)
        throw ConfigError(where + " must be an array of " + std::to_string(dimension) + " numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(dimension));
    for (std::size_t i = 0; i < dimension; ++i) {
        if (!j[i].is_number()) throw ConfigError(where + " must contain numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

namespace {

Json vector_to_json(const Eigen::VectorXd& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace

LocationFamily parse_family(ConfigNode& node)
{
    LocationFamily fam;
    auto features = node.child("features");
    fam.features.law = parse_feature_law(features.get<std::string>("law", "uniform-box"));
    fam.features.dimension = features.get<std::size_t>("dimension", 1);
    if (fam.features.law == FeatureLaw::uniform_box) {
        fam.features.low = features.get<double>("low", 0.0);
        fam.features.high = features.get<double>("high", 1.0);
    }
    node.adopt("features", features);

    auto mean = node.child("mean");
    fam.mean.kind = parse_mean_kind(mean.get<std::string>("kind", "linear"));
    fam.mean.intercept = mean.get<double>("intercept", 0.0);
    if (fam.mean.kind == MeanKind::linear) {
        const Json* c = mean.raw("coefficients");
        fam.mean.coefficients = c ? parse_point(*c, fam.features.dimension, mean.where("coefficients"))
                                  : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(fam.features.dimension));
        mean.store("coefficients", vector_to_json(fam.mean.coefficients));
    }
    if (fam.mean.kind == MeanKind::sinusoidal) {
        fam.mean.amplitude = mean.get<double>("amplitude", 1.0);
        fam.mean.frequency = mean.get<double>("frequency", 1.0);
    }
    node.adopt("mean", mean);

    auto noise = node.child("noise");
    fam.noise.kind = parse_noise_kind(noise.get<std::string>("kind", "gaussian"));
    fam.noise.scale = noise.get<double>("scale", 1.0);
    node.adopt("noise", noise);

    fam.validate();
    return fam;
}

SetClass parse_set_class(ConfigNode& node, std::size_t dimension, const std::shared_ptr<const Partition>& labels)
{
    const auto kind = parse_set_class_kind(node.get<std::string>("kind", "full-space-only"));
    const auto dim = node.get<std::size_t>("dimension", dimension);
    if (dim != dimension) throw ConfigError(node.where("dimension") + " differs from the feature dimension");
    switch (kind) {
    case SetClassKind::full_space_only: return SetClass::full_space_only(dim);
    case SetClassKind::intervals_1d:
        if (dim != 1) throw ConfigError("intervals-1d needs one-dimensional features");
        return SetClass::intervals_1d();
    case SetClassKind::l2_balls: return SetClass::l2_balls(dim);
    case SetClassKind::half_spaces: return SetClass::half_spaces(dim);
    case SetClassKind::finite_partition: break;
    }
    auto part = node.child("partition");
    const auto pkind = part.get<std::string>("kind", "grid");
    std::shared_ptr<const Partition> partition;
    if (pkind == "grid") {
        const Json* cuts = part.raw("cuts");
        if (!cuts || !cuts->is_array()) throw ConfigError(part.where("cuts") + " must be an array");
        std::vector<std::vector<double>> per_dim;
        try {
            if (dim == 1 && (cuts->empty() || (*cuts)[0].is_number())) per_dim.push_back(cuts->get<std::vector<double>>());
            else per_dim = cuts->get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(part.where("cuts") + " must hold arrays of numbers");
        }
        if (per_dim.size() != dim) throw ConfigError(part.where("cuts") + " needs one list per dimension");
        part.store("cuts", per_dim);
        partition = Partition::grid(per_dim);
    } else if (pkind == "labels") {
        if (!labels) throw ConfigError("a label partition needs labeled input data");
        partition = labels;
    } else {
        throw ConfigError(part.where("kind") + " must be \"grid\" or \"labels\"");
    }
    node.adopt("partition", part);
    return SetClass::finite_partition(partition);
}

MethodSpec parse_method(ConfigNode& node, std::size_t dimension, const std::shared_ptr<const Partition>& labels)
{
    MethodSpec m;
    m.kind = parse_method_kind(node.get<std::string>("kind", "split-marginal"));
    if (m.kind == MethodKind::thinned) m.c = node.get<double>("c", 0.5);
    if (m.kind == MethodKind::restricted) {
        auto cls = node.child("set_class");
        m.set_class = parse_set_class(cls, dimension, labels);
        node.adopt("set_class", cls);
    }
    return m;
}

RegressorOptions parse_regressor(ConfigNode& node)
{
    RegressorOptions r;
    r.kind = parse_regressor_kind(node.get<std::string>("kind", "least-squares-linear"));
    if (r.kind == RegressorKind::k_nearest_neighbor) r.k = node.get_optional_count("k");
    return r;
}

SetDescriptor parse_set_descriptor(ConfigNode& node, std::size_t dimension,
                                   const std::shared_ptr<const Partition>& partition)
{
    const auto type = node.require<std::string>("type");
    if (type == "full-space") return FullSpace{};
    if (type == "empty") return EmptySet{};
    if (type == "partition-cell") {
        if (!partition) throw ConfigError(node.where("type") + ": partition-cell needs a partition class");
        return PartitionCell{partition, node.require<int>("id")};
    }
    if (type == "interval") {
        if (dimension != 1) throw ConfigError("interval probe sets need one-dimensional features");
        Interval1d s{node.get_real("lo", -kInf), node.get_real("hi", kInf)};
        if (!(s.lo <= s.hi)) throw ConfigError(node.where("lo") + " must not exceed hi");
        return s;
    }
    if (type == "ball") {
        const Json* c = node.raw("center");
        if (!c) throw ConfigError(node.where("center") + " is required");
        Ball b{parse_point(*c, dimension, node.where("center")), node.get_real("radius", 1.0)};
        node.store("center", *c);
        if (!(b.radius >= 0.0)) throw ConfigError(node.where("radius") + " must be >= 0");
        return b;
    }
    if (type == "half-space") {
        const Json* n = node.raw("normal");
        if (!n) throw ConfigError(node.where("normal") + " is required");
        HalfSpace h{parse_point(*n, dimension, node.where("normal")), node.get_real("offset", 0.0)};
        node.store("normal", *n);
        return h;
    }
    throw ConfigError(node.where("type") + ": unknown set type " + type);
}

ExperimentConfig parse_experiment(ConfigNode& root, std::size_t default_trials)
{
    ExperimentConfig cfg;
    auto fam = root.child("family");
    cfg.family = parse_family(fam);
    root.adopt("family", fam);
    const std::size_t d = cfg.family.features.dimension;

    cfg.split.n0 = root.get<std::size_t>("n0", 500);
    cfg.split.n1 = root.get<std::size_t>("n1", 500);
    cfg.spec.alpha = root.get<double>("alpha", 0.1);
    cfg.spec.delta = root.get<double>("delta", 0.1);
    cfg.spec.validate();

    auto method = root.child("method");
    cfg.method = parse_method(method, d);
    root.adopt("method", method);
    auto reg = root.child("regressor");
    cfg.regressor = parse_regressor(reg);
    root.adopt("regressor", reg);

    cfg.trials = root.get<std::size_t>("trials", default_trials);
    cfg.generated_probes = root.get<std::size_t>("generated_probes", 0);
    if (root.has("probe_class")) {
        auto pc = root.child("probe_class");
        cfg.probe_class = parse_set_class(pc, d);
        root.adopt("probe_class", pc);
    }
    std::shared_ptr<const Partition> partition;
    if (cfg.method.set_class && cfg.method.set_class->partition()) partition = cfg.method.set_class->partition();
    if (cfg.probe_class && cfg.probe_class->partition()) partition = cfg.probe_class->partition();

    Json probes_resolved = Json::array();
    if (const Json* probes = root.raw("probe_sets")) {
        if (probes->is_string() && probes->get<std::string>() == "cells") {
            if (!partition) throw ConfigError("probe_sets = \"cells\" needs a partition class");
            for (int id : partition->cell_ids())
                cfg.probe_sets.push_back({"cell-" + std::to_string(id), PartitionCell{partition, id}});
            probes_resolved = "cells";
        } else {
            if (!probes->is_array()) throw ConfigError("probe_sets must be an array or \"cells\"");
            for (std::size_t i = 0; i < probes->size(); ++i) {
                ConfigNode p((*probes)[i], "probe_sets[" + std::to_string(i) + "]");
                const auto id = p.get<std::string>("id", "probe-" + std::to_string(i));
                cfg.probe_sets.push_back({id, parse_set_descriptor(p, d, partition)});
                p.finish();
                probes_resolved.push_back(p.resolved());
            }
        }
    }
    root.store("probe_sets", probes_resolved);

    cfg.mass_draws = root.get<std::size_t>("mass_draws", 200'000);
    cfg.rejection_cap = root.get<std::uint64_t>("rejection_cap", 10'000'000);
    cfg.seed = root.get<std::uint64_t>("seed", 0);
    cfg.keep_trial_records = root.get<bool>("keep_trial_records", false);
    cfg.validate();
    return cfg;
}

}  // namespace covlab::cli
