#include <istream>
#include <ostream>

#include "cmdp/cse.hpp"
#include "cmdp/errors.hpp"

namespace cmdp {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd from_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw UsageError("replay buffer capacity must be > 0");
}

void ReplayBuffer::push(ContextSample x) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(x));
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size,
                                                      Rng& rng) const {
  if (items_.empty()) throw EmptyBuffer("cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

std::vector<ContextSample> ReplayBuffer::sample_batch(std::size_t batch_size,
                                                      Rng& rng) const {
  std::vector<ContextSample> batch;
  batch.reserve(batch_size);
  for (std::size_t i : sample_indices(batch_size, rng)) {
    batch.push_back(items_[i]);
  }
  return batch;
}

nlohmann::json sample_to_json(const ContextSample& x) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.dTdc.rows(); ++i) {
    rows.push_back(to_vec(x.dTdc.row(i).transpose()));
  }
  return {{"s", to_vec(x.s)},          {"a", to_vec(x.a)},
          {"r", x.r},                  {"s_next", to_vec(x.s_next)},
          {"c", to_vec(x.c)},          {"dTdc", rows},
          {"dRdc", to_vec(x.dRdc)},    {"dRds_next", to_vec(x.dRds_next)}};
}

ContextSample sample_from_json(const nlohmann::json& j) {
  ContextSample x;
  x.s = from_vec(j.at("s"));
  x.a = from_vec(j.at("a"));
  x.r = j.at("r").get<double>();
  x.s_next = from_vec(j.at("s_next"));
  x.c = from_vec(j.at("c"));
  const auto& rows = j.at("dTdc");
  x.dTdc.resize(static_cast<Eigen::Index>(rows.size()), x.c.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.dTdc.row(static_cast<Eigen::Index>(i)) = from_vec(rows[i]).transpose();
  }
  x.dRdc = from_vec(j.at("dRdc"));
  x.dRds_next = from_vec(j.at("dRds_next"));
  x.validate();
  return x;
}

void ReplayBuffer::write_jsonl(std::ostream& os) const {
  for (const auto& x : items_) os << sample_to_json(x).dump() << '\n';
}

ReplayBuffer ReplayBuffer::read_jsonl(std::istream& is, std::size_t capacity) {
  ReplayBuffer buf(capacity);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    buf.push(sample_from_json(nlohmann::json::parse(line)));
  }
  return buf;
}

}  // namespace cmdp
