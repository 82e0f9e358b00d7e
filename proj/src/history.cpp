#include "ptrack/adapt.hpp"

namespace ptrack {

HistoryBuffer::HistoryBuffer(int capacity, int s_dim, int a_dim)
    : capacity_(capacity), s_dim_(s_dim), a_dim_(a_dim) {}

void HistoryBuffer::reset() { entries_.clear(); }

void HistoryBuffer::push(const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  if (s.size() != s_dim_ || a.size() != a_dim_)
    throw ShapeError("HistoryBuffer::push: dimension mismatch");
  entries_.emplace_back(s, a);
  while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

Eigen::VectorXd HistoryBuffer::flat() const {
  const int pair = s_dim_ + a_dim_;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(capacity_ * pair);
  const int pad = capacity_ - fill();
  for (int i = 0; i < fill(); ++i) {
    out.segment((pad + i) * pair, s_dim_) = entries_[i].first;
    out.segment((pad + i) * pair + s_dim_, a_dim_) = entries_[i].second;
  }
  return out;
}

HistoryEncoder::HistoryEncoder(const WmDims& dims, const std::vector<int>& hidden,
                               Rng& rng, double final_scale) {
  std::vector<int> sizes;
  sizes.push_back(dims.flat_history());
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(dims.e_dim);
  mlp = Mlp(sizes, rng, final_scale);
}

WorldModel::WorldModel(const WmDims& dims, const std::vector<int>& hidden, Rng& rng,
                       double final_scale) {
  std::vector<int> sizes;
  sizes.push_back(dims.s_dim + dims.a_dim + dims.e_dim);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(dims.s_dim);
  mlp = Mlp(sizes, rng, final_scale);
}

Eigen::VectorXd encode_history(const HistoryEncoder& encoder,
                               const HistoryBuffer& buffer) {
  return const_cast<Mlp&>(encoder.mlp).forward(Eigen::MatrixXd(buffer.flat())).col(0);
}

Eigen::VectorXd wm_step(const WorldModel& wm, const Eigen::VectorXd& s_hat,
                        const Eigen::VectorXd& action, const Eigen::VectorXd& e) {
  Eigen::VectorXd in(s_hat.size() + action.size() + e.size());
  in << s_hat, action, e;
  return s_hat + const_cast<Mlp&>(wm.mlp).forward(Eigen::MatrixXd(in)).col(0);
}

ReplayBuffer::ReplayBuffer(int num_envs, int window, long capacity_steps,
                           int holdout_every)
    : window_(window), capacity_(capacity_steps), holdout_every_(holdout_every) {
  open_.resize(num_envs);
}

void ReplayBuffer::push(int env, const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  Episode& ep = open_[env];
  if (ep.len == 0) {
    ep.s.resize(s.size(), 512);
    ep.a.resize(a.size(), 512);
  } else if (ep.len == ep.s.cols()) {
    ep.s.conservativeResize(Eigen::NoChange, ep.s.cols() * 2);
    ep.a.conservativeResize(Eigen::NoChange, ep.a.cols() * 2);
  }
  ep.s.col(ep.len) = s;
  ep.a.col(ep.len) = a;
  ++ep.len;
}

void ReplayBuffer::end_episode(int env) {
  Episode& ep = open_[env];
  if (ep.len >= window_) {
    Episode closed;
    closed.s = ep.s.leftCols(ep.len);
    closed.a = ep.a.leftCols(ep.len);
    closed.len = ep.len;
    closed.id = next_id_++;
    if (holdout_every_ > 0 && closed.id % holdout_every_ == holdout_every_ - 1) {
      holdout_.push_back(std::move(closed));
      if (holdout_.size() > 64) holdout_.pop_front();
    } else {
      train_steps_ += closed.len;
      train_.push_back(std::move(closed));
      while (train_steps_ > capacity_ && train_.size() > 1) {
        train_steps_ -= train_.front().len;
        train_.pop_front();
      }
    }
  }
  ep = Episode{};
}

long ReplayBuffer::train_windows() const {
  long n = 0;
  for (const Episode& ep : train_) n += ep.len - window_ + 1;
  return n;
}

long ReplayBuffer::holdout_windows() const {
  long n = 0;
  for (const Episode& ep : holdout_) n += ep.len - window_ + 1;
  return n;
}

const ReplayBuffer::Episode* ReplayBuffer::pick(Rng& rng,
                                                const std::deque<Episode>& pool) const {
  long total = 0;
  for (const Episode& ep : pool) total += ep.len - window_ + 1;
  if (total <= 0) return nullptr;
  long r = static_cast<long>(rng.index(static_cast<uint64_t>(total)));
  for (const Episode& ep : pool) {
    const long w = ep.len - window_ + 1;
    if (r < w) return &ep;
    r -= w;
  }
  return &pool.back();
}

namespace {
void fill_window(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a, int start,
                 int window, int id, WindowSample& out) {
  out.states = s.middleCols(start, window);
  out.actions = a.middleCols(start, window);
  out.episode_id = id;
  out.start = start;
}
}  // namespace

bool ReplayBuffer::sample(Rng& rng, WindowSample& out) {
  const Episode* ep = pick(rng, train_);
  if (!ep) return false;
  const int start = static_cast<int>(rng.index(ep->len - window_ + 1));
  fill_window(ep->s, ep->a, start, window_, ep->id, out);
  return true;
}

bool ReplayBuffer::sample_holdout(Rng& rng, WindowSample& out) {
  const Episode* ep = pick(rng, holdout_);
  if (!ep) return false;
  const int start = static_cast<int>(rng.index(ep->len - window_ + 1));
  fill_window(ep->s, ep->a, start, window_, ep->id, out);
  return true;
}

}  // namespace ptrack
