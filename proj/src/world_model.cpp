#include <cmath>

#include "ptrack/adapt.hpp"

namespace ptrack {

double persistence_loss(const WmDims& dims, const WindowSample& window) {
  const int H = dims.history;
  double loss = 0.0;
  for (int i = 1; i <= dims.rollout; ++i)
    loss += (window.states.col(H + i) - window.states.col(H)).cwiseAbs().sum();
  return loss;
}

double wm_loss(HistoryEncoder& encoder, WorldModel& wm, const WmDims& dims,
               const std::vector<const WindowSample*>& windows, bool accumulate_grads,
               WmEval* eval) {
  const int B = static_cast<int>(windows.size());
  if (B == 0) throw DomainError("wm_loss: empty window batch");
  const int S = dims.s_dim, A = dims.a_dim, E = dims.e_dim;
  const int H = dims.history, N = dims.rollout;
  const int W = dims.window();
  for (const WindowSample* w : windows)
    if (w->states.cols() != W || w->actions.cols() != W || w->states.rows() != S ||
        w->actions.rows() != A)
      throw DomainError("wm_loss: window must hold exactly H+1+N pairs");

  const int pair = S + A;
  std::vector<Eigen::MatrixXd> pred(N + 1);
  pred[0].resize(S, B);
  for (int b = 0; b < B; ++b) pred[0].col(b) = windows[b]->states.col(H);

  std::vector<Mlp::Cache> cache_e(N), cache_w(N);
  Eigen::MatrixXd phi_in(H * pair, B), wm_in(S + A + E, B);

  double total = 0.0;
  double err1 = 0.0, errN = 0.0;
  for (int i = 0; i < N; ++i) {
    for (int b = 0; b < B; ++b) {
      const WindowSample& w = *windows[b];
      for (int j = 0; j < H; ++j) {
        const int p = i + j;
        if (p <= H)
          phi_in.col(b).segment(j * pair, S) = w.states.col(p);
        else
          phi_in.col(b).segment(j * pair, S) = pred[p - H].col(b);
        phi_in.col(b).segment(j * pair + S, A) = w.actions.col(p);
      }
    }
    const Eigen::MatrixXd e =
        encoder.mlp.forward(phi_in, accumulate_grads ? &cache_e[i] : nullptr);

    wm_in.topRows(S) = pred[i];
    for (int b = 0; b < B; ++b) wm_in.col(b).segment(S, A) = windows[b]->actions.col(H + i);
    wm_in.bottomRows(E) = e;

    const Eigen::MatrixXd delta =
        wm.mlp.forward(wm_in, accumulate_grads ? &cache_w[i] : nullptr);
    pred[i + 1] = pred[i] + delta;

    double step_err = 0.0;
    for (int b = 0; b < B; ++b)
      step_err += (windows[b]->states.col(H + 1 + i) - pred[i + 1].col(b)).cwiseAbs().sum();
    total += step_err;
    if (i == 0) err1 = step_err / (B * S);
    if (i == N - 1) errN = step_err / (B * S);
  }

  if (accumulate_grads) {
    std::vector<Eigen::MatrixXd> dpred(N + 1);
    for (int k = 1; k <= N; ++k) {
      dpred[k].resize(S, B);
      for (int b = 0; b < B; ++b)
        dpred[k].col(b) = (pred[k].col(b) - windows[b]->states.col(H + k))
                              .unaryExpr([](double v) {
                                return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                              }) /
                          B;
    }
    for (int i = N - 1; i >= 0; --i) {
      const Eigen::MatrixXd& dnext = dpred[i + 1];
      const Eigen::MatrixXd dwm_in = wm.mlp.backward(cache_w[i], dnext);
      if (i >= 1) dpred[i] += dnext + dwm_in.topRows(S);
      const Eigen::MatrixXd de = dwm_in.bottomRows(E);
      const Eigen::MatrixXd dphi = encoder.mlp.backward(cache_e[i], de);
      for (int j = H - i + 1; j < H; ++j) {
        const int k = i + j - H;  // predicted state index in the history slot
        if (k >= 1 && k <= N) dpred[k] += dphi.middleRows(j * pair, S);
      }
    }
  }

  if (eval) {
    eval->loss = total / B;
    eval->err_h1 = err1;
    eval->err_hN = errN;
    double pers = 0.0;
    for (const WindowSample* w : windows) pers += persistence_loss(dims, *w);
    eval->persistence = pers / B;
  }
  return total / B;
}

}  // namespace ptrack
