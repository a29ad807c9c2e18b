/*!
  \file trim.hpp
  \brief Induced union witnesses, canonical trimming and chargeable gates.

  Trimming routes every b in the output's row set along one leftmost path
  from the output to an input.  With gate reuse a child can collect elements
  through several parents, so the disjoint-union law lives on the edges: at
  every binary gate the two edge contributions are disjoint and union to the
  gate's trimmed set.  The per-gate set is the union of the edge
  contributions entering it.
*/

#pragma once

#include "bits.hpp"
#include "circuit.hpp"
#include "instance.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace bmmlab
{

/*! All intervals K for which some union gate outputs (Gamma_B(a), K, .).
    Rows with fewer than two neighbors need no union gate and yield the
    empty list. */
inline std::vector<ColumnInterval> covering_intervals( const WitnessCircuit& w,
                                                       const EvalResult& eval,
                                                       const TripartiteInstance& inst, uint32_t a )
{
  const BitVector& gamma = inst.p.row( a );
  if ( gamma.popcount() < 2 )
    return {};
  std::vector<ColumnInterval> out;
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
    if ( w.gates[id].kind == GateKind::union_gate && eval.values[id].s == gamma )
      out.push_back( eval.values[id].k );
  std::sort( out.begin(), out.end(), []( ColumnInterval x, ColumnInterval y ) {
    return x.lo != y.lo ? x.lo < y.lo : x.hi < y.hi;
  } );
  out.erase( std::unique( out.begin(), out.end() ), out.end() );
  return out;
}

inline std::vector<ColumnInterval> covering_intervals( const WitnessCircuit& w,
                                                       const TripartiteInstance& inst, uint32_t a )
{
  return covering_intervals( w, eval_circuit( w, inst ), inst, a );
}

/*! Union circuit over the universe B, extracted from a witness. */
struct UnionCircuit
{
  struct Node
  {
    int32_t left = -1;
    int32_t right = -1;
    int32_t orig_gate = -1; //!< gate id in the source witness

    bool is_input() const { return left < 0; }
  };

  std::vector<Node> nodes;     //!< children precede parents
  std::vector<BitVector> wset; //!< per node, mask over B
  uint32_t output = 0;

  std::size_t size() const { return nodes.size(); }
};

/*! Copies the union-gate predecessors of the lexicographically first union
    gate outputting (Gamma_B(a), k, .); every input or partition gate
    feeding them becomes one fresh input node.  Empty optional when no such
    gate exists. */
inline std::optional<UnionCircuit> induced_union_witness( const WitnessCircuit& w,
                                                          const EvalResult& eval,
                                                          const TripartiteInstance& inst,
                                                          uint32_t a, ColumnInterval k )
{
  const BitVector& gamma = inst.p.row( a );
  int32_t anchor = -1;
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
    if ( w.gates[id].kind == GateKind::union_gate && eval.values[id].k == k &&
         eval.values[id].s == gamma )
    {
      anchor = static_cast<int32_t>( id );
      break;
    }
  if ( anchor < 0 )
    return std::nullopt;

  // gather the anchor's union-gate closure plus feeding gates
  std::vector<uint32_t> stack{ static_cast<uint32_t>( anchor ) };
  std::unordered_map<uint32_t, int32_t> node_of; // orig gate -> node id, filled later
  std::vector<uint32_t> members;
  node_of.emplace( anchor, -1 );
  members.push_back( anchor );
  while ( !stack.empty() )
  {
    uint32_t id = stack.back();
    stack.pop_back();
    if ( w.gates[id].kind != GateKind::union_gate )
      continue;
    for ( int32_t child : { w.gates[id].left, w.gates[id].right } )
      if ( node_of.emplace( child, -1 ).second )
      {
        members.push_back( child );
        stack.push_back( child );
      }
  }
  std::sort( members.begin(), members.end() );

  UnionCircuit u;
  u.nodes.reserve( members.size() );
  u.wset.reserve( members.size() );
  for ( uint32_t id : members )
  {
    UnionCircuit::Node node;
    node.orig_gate = static_cast<int32_t>( id );
    if ( w.gates[id].kind == GateKind::union_gate )
    {
      node.left = node_of.at( w.gates[id].left );
      node.right = node_of.at( w.gates[id].right );
    }
    node_of[id] = static_cast<int32_t>( u.nodes.size() );
    u.nodes.push_back( node );
    u.wset.push_back( eval.values[id].s );
  }
  u.output = static_cast<uint32_t>( node_of.at( anchor ) );
  return u;
}

inline std::optional<UnionCircuit> induced_union_witness( const WitnessCircuit& w,
                                                          const TripartiteInstance& inst,
                                                          uint32_t a, ColumnInterval k )
{
  return induced_union_witness( w, eval_circuit( w, inst ), inst, a, k );
}

/*! Canonical trimming of a single-output union circuit. */
struct TrimAnnotation
{
  std::vector<BitVector> gate_trim;  //!< per node
  std::vector<BitVector> left_edge;  //!< per node: contribution on the left edge
  std::vector<BitVector> right_edge; //!< per node: contribution on the right edge
};

inline TrimAnnotation trim_circuit( const UnionCircuit& u )
{
  if ( u.nodes.empty() )
    throw std::invalid_argument( "trim_circuit: empty circuit" );
  std::size_t n_b = u.wset[u.output].length();
  TrimAnnotation trim;
  trim.gate_trim.assign( u.nodes.size(), BitVector( n_b ) );
  trim.left_edge.assign( u.nodes.size(), BitVector( n_b ) );
  trim.right_edge.assign( u.nodes.size(), BitVector( n_b ) );

  u.wset[u.output].for_each_set( [&]( std::size_t b ) {
    uint32_t node = u.output;
    trim.gate_trim[node].set( b );
    while ( !u.nodes[node].is_input() )
    {
      uint32_t left = static_cast<uint32_t>( u.nodes[node].left );
      uint32_t right = static_cast<uint32_t>( u.nodes[node].right );
      uint32_t next;
      if ( u.wset[left].get( b ) )
      {
        trim.left_edge[node].set( b );
        next = left;
      }
      else if ( u.wset[right].get( b ) )
      {
        trim.right_edge[node].set( b );
        next = right;
      }
      else
        throw std::logic_error( "trim_circuit: wset does not cover child sets" );
      node = next;
      trim.gate_trim[node].set( b );
    }
  } );
  return trim;
}

/*! Disjoint-union law: at every binary gate the two edge contributions are
    disjoint and union to the gate's set, and edge contributions flow into
    the child sets; the output keeps its full row set. */
inline bool trim_invariants_hold( const UnionCircuit& u, const TrimAnnotation& trim )
{
  if ( !( trim.gate_trim[u.output] == u.wset[u.output] ) )
    return false;
  for ( uint32_t id = 0; id < u.nodes.size(); ++id )
  {
    if ( !trim.gate_trim[id].is_subset_of( u.wset[id] ) )
      return false;
    if ( u.nodes[id].is_input() )
      continue;
    const BitVector& l = trim.left_edge[id];
    const BitVector& r = trim.right_edge[id];
    if ( l.intersects( r ) )
      return false;
    if ( !( ( l | r ) == trim.gate_trim[id] ) )
      return false;
    if ( !l.is_subset_of( trim.gate_trim[u.nodes[id].left] ) ||
         !r.is_subset_of( trim.gate_trim[u.nodes[id].right] ) )
      return false;
  }
  return true;
}

struct ChargeableReport
{
  std::vector<uint32_t> gates;             //!< chargeable node ids
  std::vector<uint64_t> descendant_count;  //!< per node of the circuit
};

/*! A binary gate is chargeable when its trimmed set holds at least
    `threshold` elements of beta' and both edge contributions intersected
    with beta' differ from the gate's own trimmed intersection.  The
    chargeable descendants of g are the chargeable gates whose trimmed
    beta'-set is contained in g's (inclusion, not graph reachability). */
inline ChargeableReport chargeable_gates( const UnionCircuit& u, const TrimAnnotation& trim,
                                          const BitVector& beta_prime_set, uint64_t threshold )
{
  if ( threshold < 1 )
    throw std::invalid_argument( "chargeable_gates: threshold must be at least 1" );
  ChargeableReport report;
  std::vector<BitVector> trimmed( u.nodes.size() );
  for ( uint32_t id = 0; id < u.nodes.size(); ++id )
    trimmed[id] = trim.gate_trim[id] & beta_prime_set;
  for ( uint32_t id = 0; id < u.nodes.size(); ++id )
  {
    if ( u.nodes[id].is_input() )
      continue;
    if ( trimmed[id].popcount() < threshold )
      continue;
    BitVector l = trim.left_edge[id] & beta_prime_set;
    BitVector r = trim.right_edge[id] & beta_prime_set;
    if ( l == trimmed[id] || r == trimmed[id] )
      continue;
    report.gates.push_back( id );
  }
  report.descendant_count.assign( u.nodes.size(), 0 );
  for ( uint32_t id = 0; id < u.nodes.size(); ++id )
    for ( uint32_t ch : report.gates )
      if ( trimmed[ch].is_subset_of( trimmed[id] ) )
        ++report.descendant_count[id];
  return report;
}

} // namespace bmmlab
