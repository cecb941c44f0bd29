#include "fairwos/serialize.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "fairwos/error.hpp"

namespace fairwos {

using nlohmann::json;

namespace {

json record_to_json(const EpochRecord& r) {
  json j;
  j["epoch"] = r.epoch;
  j["loss_utility"] = r.loss_utility;
  j["loss_fair"] = r.loss_fair;
  j["loss_total"] = r.loss_total;
  j["objective"] = r.objective;
  j["disparity"] = r.disparity;
  j["lambda"] = r.lambda;
  j["grad_norm"] = r.grad_norm;
  j["theta_step_norm"] = r.theta_step_norm;
  j["grad_diff_norm"] = r.grad_diff_norm ? json(*r.grad_diff_norm) : json(nullptr);
  j["val_acc"] = r.val_acc;
  j["val_dsp"] = r.val_dsp ? json(*r.val_dsp) : json(nullptr);
  j["val_deo"] = r.val_deo ? json(*r.val_deo) : json(nullptr);
  return j;
}

EpochRecord record_from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.loss_utility = j.at("loss_utility").get<double>();
  r.loss_fair = j.at("loss_fair").get<double>();
  r.loss_total = j.at("loss_total").get<double>();
  r.objective = j.at("objective").get<double>();
  r.disparity = j.at("disparity").get<std::vector<double>>();
  r.lambda = j.at("lambda").get<std::vector<double>>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.theta_step_norm = j.at("theta_step_norm").get<double>();
  if (!j.at("grad_diff_norm").is_null()) r.grad_diff_norm = j.at("grad_diff_norm").get<double>();
  r.val_acc = j.at("val_acc").get<double>();
  if (!j.at("val_dsp").is_null()) r.val_dsp = j.at("val_dsp").get<double>();
  if (!j.at("val_deo").is_null()) r.val_deo = j.at("val_deo").get<double>();
  return r;
}

json params_to_json(const ParameterSet& params) {
  json arr = json::array();
  for (const auto& p : params.items()) {
    json e;
    e["name"] = p.name;
    e["rows"] = p.value.rows;
    e["cols"] = p.value.cols;
    e["values"] = p.value.data;
    arr.push_back(std::move(e));
  }
  return arr;
}

ParameterSet params_from_json(const json& arr) {
  ParameterSet out;
  for (const auto& e : arr) {
    Mat m(e.at("rows").get<std::size_t>(), e.at("cols").get<std::size_t>());
    const auto values = e.at("values").get<std::vector<double>>();
    if (values.size() != m.size()) throw ParseError("checkpoint: parameter size mismatch");
    m.data = values;
    out.add(e.at("name").get<std::string>(), std::move(m));
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string checksum_of(const json& body) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(body.dump())));
  return buf;
}

std::string backbone_name(Backbone b) { return b == Backbone::gcn ? "gcn" : "gin"; }

Backbone backbone_from(const std::string& s) {
  if (s == "gcn") return Backbone::gcn;
  if (s == "gin") return Backbone::gin;
  throw ParseError("checkpoint: unknown backbone '" + s + "'");
}

}  // namespace

void save_trace_jsonl(const TrainingTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const EpochRecord& r : trace.records) out << record_to_json(r).dump() << "\n";
  if (trace.final_loss) {
    json trailer;
    trailer["final_loss"] = *trace.final_loss;
    out << trailer.dump() << "\n";
  }
}

TrainingTrace load_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  TrainingTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ParseError(path + " line " + std::to_string(lineno) + ": invalid JSON");
    }
    if (j.contains("final_loss")) {
      trace.final_loss = j["final_loss"].get<double>();
      continue;
    }
    trace.records.push_back(record_from_json(j));
  }
  return trace;
}

void save_checkpoint(const ModelState& model, std::uint64_t seed, const std::string& path) {
  json body;
  body["format"] = "fairwos-checkpoint-v1";
  body["mode"] = model.mode;
  body["backbone"] = backbone_name(model.gnn.meta.backbone);
  body["layers"] = model.gnn.meta.layers;
  body["hidden"] = model.gnn.meta.hidden;
  body["seed"] = seed;
  body["input"] = model.encoder ? "encoder" : "raw";
  if (model.encoder) {
    json enc;
    enc["dim"] = model.encoder->dim;
    enc["trained"] = model.encoder->trained;
    enc["best_val_acc"] = model.encoder->best_val_acc;
    enc["params"] = params_to_json(model.encoder->params);
    body["encoder"] = std::move(enc);
  }
  body["gnn_params"] = params_to_json(model.gnn.params);
  body["init_seed"] = model.gnn.init_seed;
  body["thresholds"] = model.pseudo.thresholds;
  body["active"] = std::vector<int>(model.pseudo.active.begin(), model.pseudo.active.end());
  json lam;
  lam["w"] = model.lambda.w;
  lam["active"] = std::vector<int>(model.lambda.active.begin(), model.lambda.active.end());
  body["lambda"] = std::move(lam);

  json full = body;
  full["checksum"] = checksum_of(body);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << full.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json full = json::parse(in, nullptr, false);
  if (full.is_discarded()) throw ParseError(path + ": invalid JSON");
  if (!full.contains("checksum")) throw ValidationError(path + ": missing checksum");
  const std::string stored = full.at("checksum").get<std::string>();
  json body = full;
  body.erase("checksum");
  if (checksum_of(body) != stored) {
    throw ValidationError(path + ": checksum mismatch, checkpoint is corrupted");
  }
  if (body.at("format").get<std::string>() != "fairwos-checkpoint-v1") {
    throw ValidationError(path + ": unknown checkpoint format");
  }

  Checkpoint c;
  c.mode = body.at("mode").get<std::string>();
  c.meta.backbone = backbone_from(body.at("backbone").get<std::string>());
  c.meta.layers = body.at("layers").get<std::size_t>();
  c.meta.hidden = body.at("hidden").get<std::size_t>();
  c.seed = body.at("seed").get<std::uint64_t>();
  c.input = body.at("input").get<std::string>();
  if (body.contains("encoder")) {
    EncoderParams enc;
    enc.dim = body["encoder"].at("dim").get<std::size_t>();
    enc.trained = body["encoder"].at("trained").get<bool>();
    enc.best_val_acc = body["encoder"].at("best_val_acc").get<double>();
    enc.params = params_from_json(body["encoder"].at("params"));
    c.encoder = std::move(enc);
  }
  c.gnn.meta = c.meta;
  c.gnn.params = params_from_json(body.at("gnn_params"));
  c.gnn.init_seed = body.at("init_seed").get<std::uint64_t>();
  c.thresholds = body.at("thresholds").get<std::vector<double>>();
  for (int a : body.at("active").get<std::vector<int>>()) c.active.push_back(a != 0);
  c.lambda.w = body.at("lambda").at("w").get<std::vector<double>>();
  for (int a : body.at("lambda").at("active").get<std::vector<int>>()) {
    c.lambda.active.push_back(a != 0);
  }
  return c;
}

}  // namespace fairwos
