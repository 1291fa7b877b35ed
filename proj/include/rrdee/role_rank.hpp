#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rrdee/corpus.hpp"

namespace rrdee {

// |E| x N x |R| tensor of p(r|i,e), one N x |R| slice per event type.
// Counts start at one, so entries are strictly positive and every (e, r)
// column sums to 1 over sentence positions.
struct RoleRankDistribution {
  std::vector<Eigen::MatrixXd> slices;  // slices[e]: N x |R|

  int num_events() const { return static_cast<int>(slices.size()); }
};

// |Y_ent| x |R| tag-to-role frequency matrix, row-normalized. Y_ent is the
// tag set without O, in vocabulary order.
struct TagRoleTransition {
  Eigen::MatrixXd values;
};

// |R| x |E| role-to-event frequency matrix, row-normalized.
struct RoleEventTransition {
  Eigen::MatrixXd values;
};

RoleRankDistribution build_rrd(const std::vector<Document>& train_docs,
                               const Vocabulary& vocab);

// Read-only N x |R| plane for one event type.
const Eigen::MatrixXd& slice(const RoleRankDistribution& p, const Vocabulary& vocab,
                             const std::string& event);

TagRoleTransition build_tag_role_transition(const std::vector<Document>& train_docs,
                                            const Vocabulary& vocab);

RoleEventTransition build_role_event_transition(
    const std::vector<Document>& train_docs, const Vocabulary& vocab);

// N x |Y_ent| matrix of mention counts by sentence position: a mention of
// role r starting in sentence i counts once at (i, B-r). Nonzero columns
// are normalized to sum to 1.
Eigen::MatrixXd count_tag_positions(const std::vector<std::vector<int>>& tags,
                                    const Vocabulary& vocab);

// P' = P_y(d) . W  (the observed role-rank matrix of one document).
Eigen::MatrixXd tags_to_roles(const Eigen::MatrixXd& tag_positions,
                              const TagRoleTransition& w);

// The persisted preprocessing result: vocabulary orderings plus P, W, W'.
struct RrdArtifact {
  Vocabulary vocab;
  RoleRankDistribution rrd;
  TagRoleTransition tag_role;
  RoleEventTransition role_event;
};

RrdArtifact build_rrd_artifact(const std::vector<Document>& train_docs,
                               const Vocabulary& vocab);

void save_rrd_artifact(const std::string& path, const RrdArtifact& a);
RrdArtifact load_rrd_artifact(const std::string& path);

}  // namespace rrdee
