/*!
  \file instance.hpp
  \brief Tripartite BMM instances: the A-B adjacency P (possibly sparsified
         to P~), the B-C adjacency Q, and the matching provenance needed for
         uniqueness queries.

  Uniqueness (C[a], beta) is always computed against the unsparsified graph
  reconstructed from the origin triples; beta' additionally requires survival
  of the (a, beta(c)) edge in the sparsified adjacency.
*/

#pragma once

#include "bits.hpp"
#include "rng.hpp"
#include "rt_graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmmlab
{

/*! (i, j, k): the matched pair (a_i, c_j) sits in matching M_k; all 1-based. */
struct OriginTriple
{
  uint32_t a = 0;
  uint32_t c = 0;
  uint32_t b = 0;

  friend bool operator==( const OriginTriple&, const OriginTriple& ) = default;
};

struct InstanceSource
{
  std::string kind = "random"; //!< "rs" | "random"
  uint32_t m = 0;
  std::vector<uint32_t> s;
};

struct TripartiteInstance
{
  uint32_t n_a = 0, n_b = 0, n_c = 0;
  BooleanMatrix p; //!< A x B adjacency, sparsified when sparsify_prob > 0
  BooleanMatrix q; //!< B x C adjacency, never sparsified
  std::vector<OriginTriple> origin; //!< empty for random instances
  double sparsify_prob = 0.0;
  uint64_t seed = 0;
  InstanceSource source;

  bool has_origin() const { return !origin.empty(); }

  ColumnInterval full_interval() const { return ColumnInterval{ 1, n_c }; }

  /*! A-B adjacency of the unsparsified graph G, rebuilt from origin data. */
  BooleanMatrix unsparsified_p() const
  {
    if ( !has_origin() )
      throw std::invalid_argument( "unsparsified_p: instance carries no origin data" );
    BooleanMatrix full( n_a, n_b );
    for ( const auto& t : origin )
      full.set( t.a - 1, t.b - 1 );
    return full;
  }
};

/*! Assembles the tripartite instance of an (r,t)-graph, then removes each
    one of P independently with probability sparsify_prob.  The removal
    stream is keyed by (seed, row, col) so the result is reproducible
    regardless of traversal order. */
inline TripartiteInstance build_instance( const RtGraph& g, double sparsify_prob, uint64_t seed )
{
  if ( sparsify_prob < 0.0 || sparsify_prob > 1.0 )
    throw std::invalid_argument( "build_instance: sparsify_prob outside [0,1]" );

  TripartiteInstance inst;
  inst.n_a = g.left_size;
  inst.n_b = g.m;
  inst.n_c = g.right_size;
  inst.p = BooleanMatrix( inst.n_a, inst.n_b );
  inst.q = BooleanMatrix( inst.n_b, inst.n_c );
  inst.sparsify_prob = sparsify_prob;
  inst.seed = seed;
  inst.source.kind = "rs";
  inst.source.m = g.m;
  inst.source.s = g.s.elements;

  for ( uint32_t k = 1; k <= g.m; ++k )
    for ( const auto& e : g.matchings[k - 1] )
    {
      inst.p.set( e.u - 1, k - 1 );
      inst.q.set( k - 1, e.v - 1 );
      inst.origin.push_back( OriginTriple{ e.u, e.v, k } );
    }

  for ( uint32_t i = 0; i < inst.n_a; ++i )
    for ( uint32_t k = 0; k < inst.n_b; ++k )
      if ( inst.p.get( i, k ) && uniform01( counter_rng( seed, i, k ) ) < sparsify_prob )
        inst.p.set( i, k, false );

  return inst;
}

/*! Random instance with per-entry Bernoulli densities; no origin data. */
inline TripartiteInstance random_instance( uint32_t n_a, uint32_t n_b, uint32_t n_c,
                                           double p_density, double q_density, uint64_t seed )
{
  if ( p_density < 0.0 || p_density > 1.0 || q_density < 0.0 || q_density > 1.0 )
    throw std::invalid_argument( "random_instance: density outside [0,1]" );
  TripartiteInstance inst;
  inst.n_a = n_a;
  inst.n_b = n_b;
  inst.n_c = n_c;
  inst.p = BooleanMatrix( n_a, n_b );
  inst.q = BooleanMatrix( n_b, n_c );
  inst.seed = seed;
  inst.source.kind = "random";
  for ( uint32_t i = 0; i < n_a; ++i )
    for ( uint32_t k = 0; k < n_b; ++k )
      if ( uniform01( counter_rng( seed, 1, i, k ) ) < p_density )
        inst.p.set( i, k );
  for ( uint32_t k = 0; k < n_b; ++k )
    for ( uint32_t j = 0; j < n_c; ++j )
      if ( uniform01( counter_rng( seed, 2, k, j ) ) < q_density )
        inst.q.set( k, j );
  return inst;
}

/*! C[a], beta and beta' for one vertex a (0-based row index). */
struct UniqueStructure
{
  uint32_t a_row = 0;               //!< 0-based
  BitVector unique_cols;            //!< C[a] as a mask over C (0-based cols)
  std::vector<int32_t> beta;        //!< per 0-based column: the unique b (0-based), -1 elsewhere
};

/*! Computes C[a] = columns with exactly one common neighbor in G, and the
    map beta from each unique column to that neighbor.  Requires origin
    data; uniqueness is undefined for random instances. */
inline UniqueStructure unique_structure( const TripartiteInstance& inst, uint32_t a_row )
{
  if ( !inst.has_origin() )
    throw std::invalid_argument( "unique_structure: instance carries no origin data" );
  if ( a_row >= inst.n_a )
    throw std::invalid_argument( "unique_structure: row out of range" );

  BooleanMatrix p_full = inst.unsparsified_p();
  UniqueStructure us;
  us.a_row = a_row;
  us.unique_cols = BitVector( inst.n_c );
  us.beta.assign( inst.n_c, -1 );

  std::vector<uint32_t> common( inst.n_c, 0 );
  std::vector<int32_t> witness( inst.n_c, -1 );
  p_full.row( a_row ).for_each_set( [&]( std::size_t b ) {
    inst.q.row( b ).for_each_set( [&]( std::size_t c ) {
      ++common[c];
      witness[c] = static_cast<int32_t>( b );
    } );
  } );
  for ( uint32_t c = 0; c < inst.n_c; ++c )
    if ( common[c] == 1 )
    {
      us.unique_cols.set( c );
      us.beta[c] = witness[c];
    }
  return us;
}

/*! beta'_{a,G~}(K): mirrors of a's unique columns inside K whose (a, b)
    edge survives in the sparsified adjacency.  Mask over B. */
inline BitVector beta_prime( const TripartiteInstance& inst, const UniqueStructure& us,
                             ColumnInterval k )
{
  if ( !k.valid_in( inst.n_c ) )
    throw std::invalid_argument( "beta_prime: interval out of range" );
  BitVector out( inst.n_b );
  const BitVector& surviving = inst.p.row( us.a_row );
  us.unique_cols.for_each_set( [&]( std::size_t c ) {
    if ( c + 1 >= k.lo && c + 1 <= k.hi )
    {
      auto b = static_cast<uint32_t>( us.beta[c] );
      if ( surviving.get( b ) )
        out.set( b );
    }
  } );
  return out;
}

// ---------------------------------------------------------------------------
// instance file format
// ---------------------------------------------------------------------------

inline nlohmann::json instance_to_json( const TripartiteInstance& inst )
{
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n_a"] = inst.n_a;
  j["n_b"] = inst.n_b;
  j["n_c"] = inst.n_c;
  std::vector<std::string> p_rows, q_rows;
  p_rows.reserve( inst.n_a );
  for ( uint32_t i = 0; i < inst.n_a; ++i )
    p_rows.push_back( inst.p.row( i ).to_hex() );
  q_rows.reserve( inst.n_b );
  for ( uint32_t k = 0; k < inst.n_b; ++k )
    q_rows.push_back( inst.q.row( k ).to_hex() );
  j["p_rows"] = p_rows;
  j["q_rows"] = q_rows;
  if ( inst.has_origin() )
  {
    nlohmann::json origin = nlohmann::json::array();
    for ( const auto& t : inst.origin )
      origin.push_back( { t.a, t.c, t.b } );
    j["origin"] = std::move( origin );
  }
  j["sparsify_prob"] = inst.sparsify_prob;
  j["seed"] = inst.seed;
  nlohmann::json src;
  src["kind"] = inst.source.kind;
  src["m"] = inst.source.m;
  src["s"] = inst.source.s;
  j["source"] = std::move( src );
  return j;
}

inline TripartiteInstance instance_from_json( const nlohmann::json& j )
{
  if ( j.at( "schema_version" ).get<int>() != 1 )
    throw std::invalid_argument( "instance file: unsupported schema_version" );
  TripartiteInstance inst;
  inst.n_a = j.at( "n_a" ).get<uint32_t>();
  inst.n_b = j.at( "n_b" ).get<uint32_t>();
  inst.n_c = j.at( "n_c" ).get<uint32_t>();
  const auto& p_rows = j.at( "p_rows" );
  const auto& q_rows = j.at( "q_rows" );
  if ( p_rows.size() != inst.n_a || q_rows.size() != inst.n_b )
    throw std::invalid_argument( "instance file: row count mismatch" );
  inst.p = BooleanMatrix( inst.n_a, inst.n_b );
  inst.q = BooleanMatrix( inst.n_b, inst.n_c );
  for ( uint32_t i = 0; i < inst.n_a; ++i )
    inst.p.row( i ) = BitVector::from_hex( p_rows[i].get<std::string>(), inst.n_b );
  for ( uint32_t k = 0; k < inst.n_b; ++k )
    inst.q.row( k ) = BitVector::from_hex( q_rows[k].get<std::string>(), inst.n_c );
  if ( j.contains( "origin" ) )
  {
    for ( const auto& t : j.at( "origin" ) )
    {
      OriginTriple triple{ t.at( 0 ).get<uint32_t>(), t.at( 1 ).get<uint32_t>(),
                           t.at( 2 ).get<uint32_t>() };
      if ( triple.a < 1 || triple.a > inst.n_a || triple.c < 1 || triple.c > inst.n_c ||
           triple.b < 1 || triple.b > inst.n_b )
        throw std::invalid_argument( "instance file: origin triple out of range" );
      inst.origin.push_back( triple );
    }
  }
  inst.sparsify_prob = j.at( "sparsify_prob" ).get<double>();
  inst.seed = j.at( "seed" ).get<uint64_t>();
  inst.source.kind = j.at( "source" ).at( "kind" ).get<std::string>();
  inst.source.m = j.at( "source" ).at( "m" ).get<uint32_t>();
  inst.source.s = j.at( "source" ).at( "s" ).get<std::vector<uint32_t>>();
  return inst;
}

/*! Atomic write: temp file in the same directory, then rename. */
inline void write_text_atomic( const std::string& path, const std::string& text )
{
  std::filesystem::path target( path );
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out( tmp, std::ios::binary | std::ios::trunc );
    if ( !out )
      throw std::runtime_error( "cannot open " + tmp.string() + " for writing" );
    out << text;
  }
  std::filesystem::rename( tmp, target );
}

inline void save_instance( const TripartiteInstance& inst, const std::string& path )
{
  write_text_atomic( path, instance_to_json( inst ).dump( 1 ) + "\n" );
}

inline TripartiteInstance load_instance( const std::string& path )
{
  std::ifstream in( path );
  if ( !in )
    throw std::runtime_error( "cannot open instance file " + path );
  nlohmann::json j;
  in >> j;
  return instance_from_json( j );
}

} // namespace bmmlab
