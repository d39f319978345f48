#pragma once

// Cross-module property suite behind `kinest_cli verify`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "kinest/config.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/losses.hpp"
#include "kinest/model.hpp"
#include "kinest/pose.hpp"
#include "kinest/rotations.hpp"
#include "kinest/ssd.hpp"
#include "kinest/synthetic.hpp"

namespace kinest::verify {

/// Published scan orders, as comma-separated text.
inline constexpr std::string_view kPublishedFks =
    "0,1,4,7,10,0,2,5,8,11,0,3,6,9,13,16,18,20,0,3,6,9,12,15,0,3,6,9,14,17,19,21";
inline constexpr std::string_view kPublishedUks = "21,19,17,14,15,12,20,18,16,13,9,6,3,0,1,4,7,10,2,5,8,11";

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::size_t duality_instances = 200;
  std::size_t causality_sequences = 50;
  std::size_t rotation_samples = 10000;
  std::size_t fk_poses = 100;
  std::size_t gradient_sequences = 20;
  // Orders under test; replaceable so a harness can inject corrupted lists.
  std::vector<int> fks = kin::fks_order().forward();
  std::vector<int> uks = kin::uks_order().forward();
  kin::KinematicTree skeleton = kin::smpl22_tree();
};

// ---------------------------------------------------------------------------
// Individual properties

inline double relative_error(const ssd::RowMatrix& a, const ssd::RowMatrix& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1.0);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline ssd::SsdParams random_ssd(synth::Rng& rng, std::size_t t, std::size_t n, std::size_t p) {
  std::vector<double> a(t);
  for (double& v : a) v = rng.uniform(0.0, 1.0);
  ssd::RowMatrix b(t, n), c(t, n), x(t, p);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return {std::move(a), std::move(b), std::move(c), std::move(x)};
}

/// Recurrence, matrix form and chunked scan agree within 1e-5.
inline PropertyResult check_duality(const VerifyOptions& o) {
  synth::Rng rng(o.seed ^ 0xD0A1);
  double worst = 0.0;
  for (std::size_t i = 0; i < o.duality_instances; ++i) {
    const std::size_t t = 1 + rng.next() % 128, n = 1 + rng.next() % 8, p = 1 + rng.next() % 4;
    const auto params = random_ssd(rng, t, n, p);
    const auto ref = ssd::ssm_recurrence(params);
    worst = std::max(worst, relative_error(ssd::ssd_matrix_form(params), ref));
    for (std::size_t chunk : {std::size_t{1}, std::size_t{7}, std::size_t{16}, t}) {
      if (chunk <= t) worst = std::max(worst, relative_error(ssd::chunked_scan(params, chunk), ref));
    }
  }
  std::ostringstream d;
  d << o.duality_instances << " instances, worst relative error " << worst;
  return {"ssd_duality", o.duality_instances >= 200 && worst <= 1e-5, d.str()};
}

inline model::Mat random_mat(synth::Rng& rng, Eigen::Index r, Eigen::Index c) {
  model::Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

inline bool rows_equal(const model::Mat& a, Eigen::Index a0, const model::Mat& b, Eigen::Index b0, Eigen::Index n) {
  return (a.middleRows(a0, n).array() == b.middleRows(b0, n).array()).all();
}

inline bool frames_equal(const kin::JointTensor<float>& a, std::size_t a0, const kin::JointTensor<float>& b,
                         std::size_t b0, std::size_t n) {
  const std::size_t stride = a.joints * a.dim;
  return std::equal(a.data.begin() + static_cast<std::ptrdiff_t>(a0 * stride),
                    a.data.begin() + static_cast<std::ptrdiff_t>((a0 + n) * stride),
                    b.data.begin() + static_cast<std::ptrdiff_t>(b0 * stride));
}

/// Dropping future frames leaves earlier forward-branch outputs bit-identical;
/// dropping past frames leaves later backward-branch outputs bit-identical.
/// Checked for the temporal Bi-SSD and the STMM scan branches.
inline PropertyResult check_causality(const VerifyOptions& o) {
  ModelConfig c = micro_config();
  c.seed = o.seed;
  const Weights w = model::init_weights(c);
  const kin::ScanOrder order = kin::scan_order(c.scan_strategy);
  synth::Rng rng(o.seed ^ 0xCA5A);
  std::size_t failures = 0;
  for (std::size_t i = 0; i < o.causality_sequences; ++i) {
    const auto len = static_cast<Eigen::Index>(2 + rng.next() % 30);
    const auto cut = static_cast<Eigen::Index>(1 + rng.next() % static_cast<std::uint64_t>(len - 1));
    const model::Mat x = random_mat(rng, len, static_cast<Eigen::Index>(c.embed_dim));
    const model::Mat head = x.topRows(cut);
    const model::Mat tail = x.bottomRows(len - cut);

    const auto full = model::bi_ssd(x, w, model::tfm_prefix(0), c);
    const auto past = model::bi_ssd(head, w, model::tfm_prefix(0), c);
    const auto future = model::bi_ssd(tail, w, model::tfm_prefix(0), c);
    bool ok = rows_equal(full.forward, 0, past.forward, 0, cut) &&
              rows_equal(full.backward, cut, future.backward, 0, len - cut);

    const auto sf = model::stmm_branches(x, w, 0, order, c);
    const auto sp = model::stmm_branches(head, w, 0, order, c);
    const auto su = model::stmm_branches(tail, w, 0, order, c);
    const auto ucut = static_cast<std::size_t>(cut), ulen = static_cast<std::size_t>(len);
    ok = ok && frames_equal(sf.forward, 0, sp.forward, 0, ucut) &&
         frames_equal(sf.backward, ucut, su.backward, 0, ulen - ucut);
    if (!ok) ++failures;
  }
  return {"causality", failures == 0,
          std::to_string(o.causality_sequences) + " sequences, " + std::to_string(failures) + " violations"};
}

inline rot::Vec3 random_unit(synth::Rng& rng) {
  rot::Vec3 v;
  do {
    v = {rng.normal(), rng.normal(), rng.normal()};
  } while (v.norm() < 1e-6);
  return v.normalized();
}

/// exp(log(R)) = R within 1e-7 and Gram-Schmidt output orthonormal within 1e-9.
inline PropertyResult check_rotations(const VerifyOptions& o) {
  synth::Rng rng(o.seed ^ 0x50E3);
  const double special[] = {1e-9, 1e-6, std::numbers::pi - 1e-6, std::numbers::pi};
  double worst_rt = 0.0, worst_gs = 0.0;
  for (std::size_t i = 0; i < o.rotation_samples; ++i) {
    const double theta = i < 4 * 50 ? special[i % 4] : rng.uniform(0.0, std::numbers::pi);
    const rot::Mat3 r = rot::exp_map(theta * random_unit(rng));
    worst_rt = std::max(worst_rt, (rot::exp_map(rot::matrix_to_log(r)) - r).norm());

    rot::Rot6D v;
    for (double& e : v) e = rng.normal();
    const rot::Mat3 g = rot::sixd_to_matrix(v);
    worst_gs = std::max(worst_gs, (g.transpose() * g - rot::Mat3::Identity()).norm());
    worst_gs = std::max(worst_gs, std::abs(g.determinant() - 1.0));
  }
  std::ostringstream d;
  d << o.rotation_samples << " samples, round-trip " << worst_rt << ", orthonormality " << worst_gs;
  return {"rotation_round_trip", worst_rt <= 1e-7 && worst_gs <= 1e-9, d.str()};
}

/// Orders match the published lists; FKS branches follow parent links.
inline PropertyResult check_scan_orders(const VerifyOptions& o) {
  std::vector<std::string> problems;
  if (join(o.fks) != kPublishedFks) problems.push_back("fks differs from published list");
  if (join(o.uks) != kPublishedUks) problems.push_back("uks differs from published list");
  if (o.fks.size() != 32) problems.push_back("fks length " + std::to_string(o.fks.size()));
  if (o.uks.size() != 22) problems.push_back("uks length " + std::to_string(o.uks.size()));
  for (std::size_t k = 0; k < o.fks.size(); ++k) {
    const int j = o.fks[k];
    if (j < 0 || static_cast<std::size_t>(j) >= o.skeleton.size()) {
      problems.push_back("fks entry out of range");
      break;
    }
    const bool branch_start = o.skeleton.parent(static_cast<std::size_t>(j)) < 0;
    if (k == 0 && !branch_start) problems.push_back("fks does not start at the root");
    if (k > 0 && !branch_start && o.skeleton.parent(static_cast<std::size_t>(j)) != o.fks[k - 1]) {
      problems.push_back("fks step " + std::to_string(o.fks[k - 1]) + "->" + std::to_string(j) + " is not a bone");
    }
  }
  try {
    if (!kin::ScanOrder(o.uks).is_permutation()) problems.push_back("uks is not a permutation");
    kin::ScanOrder f(o.fks);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  std::string d = problems.empty() ? "fks(32) and uks(22) match" : "";
  for (const auto& p : problems) d += (d.empty() ? "" : "; ") + p;
  return {"scan_order_exactness", problems.empty(), d};
}

/// 4x4 homogeneous chain: T_j = T_parent [R_j | offset_j].
inline std::vector<Eigen::Vector3d> homogeneous_fk(const std::vector<rot::Mat3>& local, const kin::KinematicTree& tree,
                                                   const Eigen::Vector3d& root) {
  std::vector<Eigen::Matrix4d> g(tree.size());
  std::vector<bool> done(tree.size(), false);
  std::function<void(std::size_t)> visit = [&](std::size_t j) {
    if (done[j]) return;
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() = local[j];
    const int p = tree.parent(j);
    if (p < 0) {
      t.topRightCorner<3, 1>() = root;
      g[j] = t;
    } else {
      visit(static_cast<std::size_t>(p));
      t.topRightCorner<3, 1>() = tree.offset(j);
      g[j] = g[static_cast<std::size_t>(p)] * t;
    }
    done[j] = true;
  };
  std::vector<Eigen::Vector3d> out(tree.size());
  for (std::size_t j = 0; j < tree.size(); ++j) {
    visit(j);
    out[j] = g[j].topRightCorner<3, 1>();
  }
  return out;
}

/// FK against the homogeneous oracle, bone lengths and rigid invariance.
inline PropertyResult check_fk(const VerifyOptions& o) {
  synth::Rng rng(o.seed ^ 0xF00D);
  const auto& tree = o.skeleton;
  double oracle = 0.0, bones = 0.0, rigid = 0.0;
  std::vector<rot::Mat3> local(tree.size());
  for (std::size_t i = 0; i < o.fk_poses; ++i) {
    for (auto& r : local) r = rot::exp_map(rng.uniform(0.0, std::numbers::pi) * random_unit(rng));
    const Eigen::Vector3d root(rng.normal(), rng.normal(), rng.normal());
    const auto pos = kin::forward_kinematics(local, tree, root);
    const auto ref = homogeneous_fk(local, tree, root);
    for (std::size_t j = 0; j < tree.size(); ++j) {
      oracle = std::max(oracle, (pos[j] - ref[j]).norm());
      const int p = tree.parent(j);
      if (p >= 0) bones = std::max(bones, std::abs((pos[j] - pos[static_cast<std::size_t>(p)]).norm() - tree.offset(j).norm()));
    }
    // Rotating the root by Q and moving it by t maps every joint p -> Q p + t.
    const rot::Mat3 q = rot::exp_map(rng.uniform(0.0, std::numbers::pi) * random_unit(rng));
    const Eigen::Vector3d shift(rng.normal(), rng.normal(), rng.normal());
    auto moved = local;
    const auto r0 = static_cast<std::size_t>(tree.root());
    moved[r0] = q * local[r0];
    const auto pos2 = kin::forward_kinematics(moved, tree, q * root + shift);
    for (std::size_t j = 0; j < tree.size(); ++j) rigid = std::max(rigid, (pos2[j] - (q * pos[j] + shift)).norm());
  }
  std::ostringstream d;
  d << o.fk_poses << " poses, oracle " << oracle << ", bone " << bones << ", rigid " << rigid;
  return {"fk_oracle", oracle <= 1e-9 && bones <= 1e-9 && rigid <= 1e-9, d.str()};
}

/// Random 22-joint sequence with frame-to-frame steps of 0.2 to 2 rad and
/// perturbed, unnormalized 6D values.
inline PoseSequence random_gradient_sequence(synth::Rng& rng, std::size_t frames) {
  PoseSequence p(frames);
  for (std::size_t j = 0; j < p.joints(); ++j) {
    rot::Mat3 r = rot::exp_map(rng.uniform(0.0, 3.0) * random_unit(rng));
    for (std::size_t l = 0; l < frames; ++l) {
      if (l > 0) r = r * rot::exp_map(rng.uniform(0.2, 2.0) * random_unit(rng));
      rot::Rot6D v = rot::matrix_to_sixd(r);
      const double s1 = rng.uniform(0.5, 2.0), s2 = rng.uniform(0.5, 2.0);
      for (std::size_t k = 0; k < 3; ++k) v[k] = s1 * v[k] + 0.1 * rng.normal();
      for (std::size_t k = 3; k < 6; ++k) v[k] = s2 * v[k] + 0.1 * rng.normal();
      p.set_sixd(l, j, v);
    }
  }
  return p;
}

struct GradientCheckStats {
  std::size_t components = 0;
  std::size_t within_tight = 0;  // relative error <= 1e-4
  double worst_smooth = 0.0;     // worst relative error away from kinks
  std::size_t near_kink = 0;
};

/// Central differences (h = 1e-5) against grad_total_loss. A component is
/// near a kink when any L1 argument it feeds is smaller than `kink_margin`.
inline GradientCheckStats gradient_check(const PoseSequence& y, const PoseSequence& z, const loss::LossWeights& w,
                                         double h = 1e-5, double kink_margin = 1e-3) {
  GradientCheckStats st;
  const PoseSequence g = loss::grad_total_loss(y, z, w);
  const std::size_t frames = y.frames(), joints = y.joints();

  // Per (frame, joint): smallest |angular-velocity residual| among steps touching that frame.
  std::vector<double> angvel_gap(frames * joints, std::numeric_limits<double>::infinity());
  if (frames >= 2) {
    const auto wy = loss::angular_velocity(y), wz = loss::angular_velocity(z);
    for (std::size_t t = 0; t + 1 < frames; ++t)
      for (std::size_t j = 0; j < joints; ++j) {
        const double m = (wz.at(t, j) - wy.at(t, j)).cwiseAbs().minCoeff();
        for (std::size_t l : {t, t + 1}) angvel_gap[l * joints + j] = std::min(angvel_gap[l * joints + j], m);
      }
  }

  PoseSequence probe = y;
  for (std::size_t l = 0; l < frames; ++l)
    for (std::size_t j = 0; j < joints; ++j)
      for (std::size_t k = 0; k < 6; ++k) {
        double& v = probe.at(l, j, k);
        const double orig = v;
        v = orig + h;
        const double up = loss::total_loss(probe, z, w);
        v = orig - h;
        const double down = loss::total_loss(probe, z, w);
        v = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = g.at(l, j, k);
        const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        ++st.components;
        if (rel <= 1e-4) ++st.within_tight;
        const bool kink = std::abs(orig - z.at(l, j, k)) < kink_margin || angvel_gap[l * joints + j] < kink_margin;
        if (kink) {
          ++st.near_kink;
        } else {
          st.worst_smooth = std::max(st.worst_smooth, rel);
        }
      }
  return st;
}

inline PropertyResult check_gradient(const VerifyOptions& o) {
  synth::Rng rng(o.seed ^ 0x6AAD);
  GradientCheckStats total;
  for (std::size_t i = 0; i < o.gradient_sequences; ++i) {
    const std::size_t frames = 8;
    const PoseSequence y = random_gradient_sequence(rng, frames);
    const PoseSequence z = random_gradient_sequence(rng, frames);
    const auto st = gradient_check(y, z, loss::LossWeights{});
    total.components += st.components;
    total.within_tight += st.within_tight;
    total.near_kink += st.near_kink;
    total.worst_smooth = std::max(total.worst_smooth, st.worst_smooth);
  }
  const double frac = static_cast<double>(total.within_tight) / static_cast<double>(total.components);
  std::ostringstream d;
  d << total.components << " components, " << frac * 100.0 << "% within 1e-4, worst away from kinks "
    << total.worst_smooth;
  return {"loss_gradient", frac >= 0.99 && total.worst_smooth <= 1e-2, d.str()};
}

// ---------------------------------------------------------------------------

inline std::vector<PropertyResult> run_all(const VerifyOptions& o = {}) {
  std::vector<PropertyResult> out;
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      out.push_back(fn(o));
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("ssd_duality", check_duality);
  guarded("causality", check_causality);
  guarded("rotation_round_trip", check_rotations);
  guarded("scan_order_exactness", check_scan_orders);
  guarded("fk_oracle", check_fk);
  guarded("loss_gradient", check_gradient);
  return out;
}

inline bool all_passed(const std::vector<PropertyResult>& r) {
  return std::all_of(r.begin(), r.end(), [](const PropertyResult& p) { return p.passed; });
}

}  // namespace kinest::verify
