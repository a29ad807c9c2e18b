/*!
  \file circuit.hpp
  \brief Witness circuits over a tripartite instance: typed gates carrying
         (S, K, v) triples, bottom-up evaluation, structural and correctness
         validation, and deduplicated row-class cost accounting.

  Gate semantics:
    input(b)            -> ({b}, C, Q_b)
    partition(K') on (S,K,v)   undefined unless K' is a subinterval of K,
                               else (S, K', v|_{K'})
    union on (S_L,K_L,v_L),(S_R,K_R,v_R)
                               undefined unless K_L == K_R,
                               else (S_L u S_R, K_L, v_L | v_R)
    concat on left/right       undefined unless min K_L <= min K_R,
                               max K_L + 1 >= min K_R, max K_L <= max K_R and
                               S_L == S_R; else (S_L, [min K_L..max K_R],
                               v_L ++ last (max K_R - max K_L) bits of v_R)

  A circuit is structured when union gates never feed partition gates and
  concatenation gates never feed partition or union gates.
*/

#pragma once

#include "bits.hpp"
#include "instance.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace bmmlab
{

enum class GateKind : uint8_t
{
  input,
  partition,
  union_gate,
  concat
};

inline const char* gate_kind_name( GateKind k )
{
  switch ( k )
  {
  case GateKind::input: return "input";
  case GateKind::partition: return "partition";
  case GateKind::union_gate: return "union";
  case GateKind::concat: return "concat";
  }
  return "?";
}

struct Gate
{
  GateKind kind = GateKind::input;
  int32_t left = -1;   //!< child gate id, -1 when unused
  int32_t right = -1;
  uint32_t b = 0;      //!< input gates: 0-based B row
  ColumnInterval k{};  //!< partition gates: the assigned subinterval
};

struct GateValue
{
  BitVector s;      //!< subset of B, length n_b
  ColumnInterval k; //!< the carried subinterval of C
  BitVector v;      //!< wrow(Q_S)|_K, length k.width()
};

struct WitnessCircuit
{
  std::vector<Gate> gates;              //!< topologically ordered (children first)
  std::vector<uint32_t> outputs;        //!< designated gate ids
  std::vector<uint32_t> output_rows;    //!< parallel: the 0-based A row each output witnesses

  std::size_t size() const { return gates.size(); }

  /*! Structural sanity: ids in range, children precede parents, arity
      matches kind.  Throws on breach. */
  void check_shape() const
  {
    for ( std::size_t i = 0; i < gates.size(); ++i )
    {
      const Gate& g = gates[i];
      int need = g.kind == GateKind::input ? 0 : g.kind == GateKind::partition ? 1 : 2;
      int got = ( g.left >= 0 ) + ( g.right >= 0 );
      if ( need != got )
        throw std::invalid_argument( "circuit: arity mismatch at gate " + std::to_string( i ) );
      for ( int32_t child : { g.left, g.right } )
        if ( child >= 0 && static_cast<std::size_t>( child ) >= i )
          throw std::invalid_argument( "circuit: child does not precede gate " +
                                       std::to_string( i ) );
    }
    for ( uint32_t out : outputs )
      if ( out >= gates.size() )
        throw std::invalid_argument( "circuit: output id out of range" );
  }

  /*! No union -> partition edge, no concat -> partition or concat -> union edge. */
  bool structured() const
  {
    for ( const Gate& g : gates )
      for ( int32_t child : { g.left, g.right } )
      {
        if ( child < 0 )
          continue;
        GateKind ck = gates[child].kind;
        if ( g.kind == GateKind::partition && ck != GateKind::input &&
             ck != GateKind::partition )
          return false;
        if ( g.kind == GateKind::union_gate && ck == GateKind::concat )
          return false;
      }
    return true;
  }
};

enum class UndefinedReason : uint8_t
{
  partition_not_subinterval,
  union_interval_mismatch,
  concat_children_unordered,
  concat_gap,
  concat_right_end_short,
  concat_set_mismatch
};

inline const char* undefined_reason_name( UndefinedReason r )
{
  switch ( r )
  {
  case UndefinedReason::partition_not_subinterval: return "partition: K' not a subinterval of K";
  case UndefinedReason::union_interval_mismatch: return "union: K_L != K_R";
  case UndefinedReason::concat_children_unordered: return "concat: min K_L > min K_R";
  case UndefinedReason::concat_gap: return "concat: max K_L + 1 < min K_R";
  case UndefinedReason::concat_right_end_short: return "concat: max K_L > max K_R";
  case UndefinedReason::concat_set_mismatch: return "concat: S_L != S_R";
  }
  return "?";
}

struct UndefinedGate
{
  uint32_t gate = 0;
  UndefinedReason reason{};
};

struct EvalResult
{
  std::vector<GateValue> values;        //!< valid up to the first undefined gate
  std::optional<UndefinedGate> undefined;

  bool all_defined() const { return !undefined.has_value(); }
};

/*! Bottom-up evaluation, stopping at the first (lowest id) undefined gate. */
inline EvalResult eval_circuit( const WitnessCircuit& w, const TripartiteInstance& inst )
{
  w.check_shape();
  EvalResult res;
  res.values.reserve( w.gates.size() );
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
  {
    const Gate& g = w.gates[id];
    switch ( g.kind )
    {
    case GateKind::input:
    {
      if ( g.b >= inst.n_b )
        throw std::invalid_argument( "eval_circuit: input gate row out of range" );
      GateValue val;
      val.s = BitVector( inst.n_b );
      val.s.set( g.b );
      val.k = inst.full_interval();
      val.v = inst.q.row( g.b );
      res.values.push_back( std::move( val ) );
      break;
    }
    case GateKind::partition:
    {
      const GateValue& in = res.values[g.left];
      if ( !in.k.contains( g.k ) )
      {
        res.undefined = UndefinedGate{ id, UndefinedReason::partition_not_subinterval };
        return res;
      }
      GateValue val;
      val.s = in.s;
      val.k = g.k;
      val.v = in.v.slice( g.k.lo - in.k.lo, g.k.width() );
      res.values.push_back( std::move( val ) );
      break;
    }
    case GateKind::union_gate:
    {
      const GateValue& l = res.values[g.left];
      const GateValue& r = res.values[g.right];
      if ( !( l.k == r.k ) )
      {
        res.undefined = UndefinedGate{ id, UndefinedReason::union_interval_mismatch };
        return res;
      }
      GateValue val;
      val.s = l.s | r.s;
      val.k = l.k;
      val.v = l.v | r.v;
      res.values.push_back( std::move( val ) );
      break;
    }
    case GateKind::concat:
    {
      const GateValue& l = res.values[g.left];
      const GateValue& r = res.values[g.right];
      std::optional<UndefinedReason> why;
      if ( l.k.lo > r.k.lo )
        why = UndefinedReason::concat_children_unordered;
      else if ( l.k.hi + 1 < r.k.lo )
        why = UndefinedReason::concat_gap;
      else if ( l.k.hi > r.k.hi )
        why = UndefinedReason::concat_right_end_short;
      else if ( !( l.s == r.s ) )
        why = UndefinedReason::concat_set_mismatch;
      if ( why )
      {
        res.undefined = UndefinedGate{ id, *why };
        return res;
      }
      GateValue val;
      val.s = l.s;
      val.k = ColumnInterval{ l.k.lo, r.k.hi };
      uint32_t tail = r.k.hi - l.k.hi;
      val.v = BitVector( val.k.width() );
      for ( uint32_t i = 0; i < l.v.length(); ++i )
        if ( l.v.get( i ) )
          val.v.set( i );
      for ( uint32_t i = 0; i < tail; ++i )
        if ( r.v.get( r.v.length() - tail + i ) )
          val.v.set( l.v.length() + i );
      res.values.push_back( std::move( val ) );
      break;
    }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// row-class cost accounting
// ---------------------------------------------------------------------------

/*! Exact deduplicated ledger of union row-classes {v, v_L, v_R}.

    Class identity is the set of member bit strings alone; members of equal
    content collapse.  Keys are exact encodings, not hashes: classes whose
    members fit 16 bits pack into one word, everything else keys on the
    canonical byte serialization. */
class RowClassLedger
{
public:
  /*! Folds one union event into the ledger.  Returns true when the class
      was new; first occurrences add min popcount to the cost sum. */
  bool insert( const BitVector& v_l, const BitVector& v_r, const BitVector& v )
  {
    if ( v.length() <= 16 )
      return insert_packed( static_cast<uint32_t>( v.length() ), v_l.word64(), v_r.word64(),
                            v.word64() );
    std::string key = class_key( v_l, v_r, v );
    bool fresh = big_.insert( std::move( key ) ).second;
    if ( fresh )
    {
      ++distinct_;
      cost_sum_ += std::min( { v_l.popcount(), v_r.popcount(), v.popcount() } );
    }
    return fresh;
  }

  /*! Word fast path for width <= 16 members; key-compatible with insert().
      Members always sort with any duplicate on the upper side (the union
      result dominates its operands bitwise), so the sorted triple is a
      faithful encoding of the member set. */
  bool insert_packed( uint32_t width, uint64_t v_l, uint64_t v_r, uint64_t v )
  {
    uint64_t a = v_l, b = v_r, c = v;
    if ( a > b )
      std::swap( a, b );
    if ( b > c )
      std::swap( b, c );
    if ( a > b )
      std::swap( a, b );
    uint64_t key = ( uint64_t( width ) << 48 ) | ( a << 32 ) | ( b << 16 ) | c;
    bool fresh = small_.insert( key ).second;
    if ( fresh )
    {
      ++distinct_;
      cost_sum_ += std::min( { std::popcount( v_l ), std::popcount( v_r ), std::popcount( v ) } );
    }
    return fresh;
  }

  static std::string class_key( const BitVector& v_l, const BitVector& v_r, const BitVector& v )
  {
    std::vector<const BitVector*> members{ &v_l, &v_r, &v };
    std::sort( members.begin(), members.end(), []( const BitVector* a, const BitVector* b ) {
      if ( a->length() != b->length() )
        return a->length() < b->length();
      return a->words() < b->words();
    } );
    members.erase( std::unique( members.begin(), members.end(),
                                []( const BitVector* a, const BitVector* b ) { return *a == *b; } ),
                   members.end() );
    std::string key;
    key.push_back( static_cast<char>( members.size() ) );
    for ( const BitVector* m : members )
      m->append_key( key );
    return key;
  }

  uint64_t distinct() const { return distinct_; }
  uint64_t cost_sum() const { return cost_sum_; }

private:
  std::unordered_set<uint64_t> small_;
  std::unordered_set<std::string> big_;
  uint64_t distinct_ = 0;
  uint64_t cost_sum_ = 0;
};

struct CostReport
{
  std::string algorithm;
  uint32_t n_a = 0, n_b = 0, n_c = 0;
  std::string kind;        //!< instance kind: rs | random
  uint64_t seed = 0;
  uint64_t gate_count = 0;
  uint64_t union_count = 0;
  uint64_t distinct_class_count = 0;
  uint64_t class_cost_sum = 0;
  double wall_ms = 0.0;

  uint64_t total() const { return gate_count + class_cost_sum; }

  static std::string csv_header()
  {
    return "algorithm,n_a,n_b,n_c,kind,seed,gates,distinct_classes,class_cost,total,wall_ms";
  }

  std::string csv_row() const
  {
    std::string row = algorithm;
    auto add = [&row]( auto v ) { row += "," + std::to_string( v ); };
    add( n_a );
    add( n_b );
    add( n_c );
    row += "," + kind;
    add( seed );
    add( gate_count );
    add( distinct_class_count );
    add( class_cost_sum );
    add( total() );
    row += "," + std::to_string( wall_ms );
    return row;
  }
};

/*! Gate count plus deduplicated class cost of every union gate.  The
    circuit must evaluate fully defined on the instance. */
inline CostReport cost_report( const WitnessCircuit& w, const TripartiteInstance& inst )
{
  EvalResult eval = eval_circuit( w, inst );
  if ( !eval.all_defined() )
    throw std::invalid_argument( std::string( "cost_report: undefined gate: " ) +
                                 undefined_reason_name( eval.undefined->reason ) );
  CostReport report;
  report.n_a = inst.n_a;
  report.n_b = inst.n_b;
  report.n_c = inst.n_c;
  report.kind = inst.source.kind;
  report.seed = inst.seed;
  report.gate_count = w.gates.size();
  RowClassLedger ledger;
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
    if ( w.gates[id].kind == GateKind::union_gate )
    {
      ++report.union_count;
      ledger.insert( eval.values[w.gates[id].left].v, eval.values[w.gates[id].right].v,
                     eval.values[id].v );
    }
  report.distinct_class_count = ledger.distinct();
  report.class_cost_sum = ledger.cost_sum();
  return report;
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

struct ValidationReport
{
  bool structured = false;
  bool all_defined = false;
  bool correct = false;
  std::vector<uint32_t> missing_rows; //!< 0-based rows lacking their witness gate
  std::vector<uint32_t> empty_rows;   //!< 0-based rows with empty neighborhood (exempt)
  bool oracle_checked = false;
  bool oracle_ok = true;
  std::string detail;
};

/*! Correctness per the model: structured, fully defined, and for every
    a in A with nonempty neighborhood some gate outputs
    (Gamma_B(a), C, wrow(Q_Gamma(a))).  Rows emptied by sparsification have
    no gate value to carry (the model has no constant gates) and are exempt
    but recorded.  When `with_oracle` (default: auto for small instances),
    designated output rows are additionally cross-checked against
    bmm_oracle. */
inline ValidationReport validate_witness( const WitnessCircuit& w, const TripartiteInstance& inst,
                                          std::optional<bool> with_oracle = std::nullopt )
{
  ValidationReport report;
  report.structured = w.structured();
  EvalResult eval = eval_circuit( w, inst );
  report.all_defined = eval.all_defined();
  if ( !report.all_defined )
  {
    report.detail = std::string( "gate " ) + std::to_string( eval.undefined->gate ) + ": " +
                    undefined_reason_name( eval.undefined->reason );
    return report;
  }

  // index full-interval gate values by their S set
  std::unordered_map<std::string, uint32_t> by_set;
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
  {
    const GateValue& val = eval.values[id];
    if ( val.k == inst.full_interval() )
    {
      std::string key;
      val.s.append_key( key );
      by_set.emplace( std::move( key ), id );
    }
  }

  bool all_rows = true;
  for ( uint32_t a = 0; a < inst.n_a; ++a )
  {
    const BitVector& gamma = inst.p.row( a );
    if ( !gamma.any() )
    {
      report.empty_rows.push_back( a );
      continue;
    }
    std::string key;
    gamma.append_key( key );
    auto it = by_set.find( key );
    if ( it == by_set.end() || !( eval.values[it->second].v == wrow( inst.q, gamma ) ) )
    {
      report.missing_rows.push_back( a );
      all_rows = false;
    }
  }
  report.correct = report.structured && report.all_defined && all_rows;

  bool run_oracle = with_oracle.value_or( static_cast<uint64_t>( inst.n_a ) * inst.n_b * inst.n_c <=
                                          ( uint64_t( 1 ) << 22 ) );
  if ( run_oracle )
  {
    report.oracle_checked = true;
    BooleanMatrix product = bmm_oracle( inst.p, inst.q );
    bool annotated = w.output_rows.size() == w.outputs.size();
    for ( std::size_t i = 0; i < w.outputs.size() && report.oracle_ok; ++i )
    {
      const GateValue& val = eval.values[w.outputs[i]];
      std::vector<uint32_t> rows;
      if ( annotated )
        rows.push_back( w.output_rows[i] );
      else // derive: the gate witnesses every row with this neighborhood
        for ( uint32_t a = 0; a < inst.n_a; ++a )
          if ( inst.p.row( a ) == val.s )
            rows.push_back( a );
      for ( uint32_t a : rows )
        if ( !( val.v == product.row( a ) ) || !( val.k == inst.full_interval() ) )
        {
          report.oracle_ok = false;
          report.correct = false;
          report.detail =
              "output gate disagrees with bmm_oracle on row " + std::to_string( a + 1 );
          break;
        }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// witness file format (small circuits)
// ---------------------------------------------------------------------------

inline nlohmann::json witness_to_json( const WitnessCircuit& w )
{
  nlohmann::json gates = nlohmann::json::array();
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
  {
    const Gate& g = w.gates[id];
    nlohmann::json jg;
    jg["id"] = id;
    jg["kind"] = gate_kind_name( g.kind );
    nlohmann::json children = nlohmann::json::array();
    if ( g.left >= 0 )
      children.push_back( g.left );
    if ( g.right >= 0 )
      children.push_back( g.right );
    jg["children"] = std::move( children );
    if ( g.kind == GateKind::input )
      jg["b"] = g.b + 1; // 1-based on disk
    if ( g.kind == GateKind::partition )
    {
      jg["k_lo"] = g.k.lo;
      jg["k_hi"] = g.k.hi;
    }
    gates.push_back( std::move( jg ) );
  }
  nlohmann::json j;
  j["gates"] = std::move( gates );
  j["outputs"] = w.outputs;
  j["output_rows"] = [&] {
    std::vector<uint32_t> rows;
    rows.reserve( w.output_rows.size() );
    for ( uint32_t a : w.output_rows )
      rows.push_back( a + 1 );
    return rows;
  }();
  return j;
}

inline WitnessCircuit witness_from_json( const nlohmann::json& j )
{
  WitnessCircuit w;
  for ( const auto& jg : j.at( "gates" ) )
  {
    Gate g;
    std::string kind = jg.at( "kind" ).get<std::string>();
    if ( kind == "input" )
    {
      g.kind = GateKind::input;
      g.b = jg.at( "b" ).get<uint32_t>() - 1;
    }
    else if ( kind == "partition" )
    {
      g.kind = GateKind::partition;
      g.k = ColumnInterval{ jg.at( "k_lo" ).get<uint32_t>(), jg.at( "k_hi" ).get<uint32_t>() };
    }
    else if ( kind == "union" )
      g.kind = GateKind::union_gate;
    else if ( kind == "concat" )
      g.kind = GateKind::concat;
    else
      throw std::invalid_argument( "witness file: unknown gate kind " + kind );
    const auto& children = jg.at( "children" );
    if ( children.size() >= 1 )
      g.left = children[0].get<int32_t>();
    if ( children.size() >= 2 )
      g.right = children[1].get<int32_t>();
    w.gates.push_back( g );
  }
  w.outputs = j.at( "outputs" ).get<std::vector<uint32_t>>();
  // row annotations are an optional extension; validation derives the rows
  // from the gate values when they are absent
  if ( j.contains( "output_rows" ) )
  {
    for ( uint32_t a : j.at( "output_rows" ).get<std::vector<uint32_t>>() )
      w.output_rows.push_back( a - 1 );
    if ( w.output_rows.size() != w.outputs.size() )
      throw std::invalid_argument( "witness file: outputs and output_rows must match" );
  }
  w.check_shape();
  return w;
}

inline void save_witness( const WitnessCircuit& w, const std::string& path )
{
  write_text_atomic( path, witness_to_json( w ).dump( 1 ) + "\n" );
}

inline WitnessCircuit load_witness( const std::string& path )
{
  std::ifstream in( path );
  if ( !in )
    throw std::runtime_error( "cannot open witness file " + path );
  nlohmann::json j;
  in >> j;
  return witness_from_json( j );
}

} // namespace bmmlab
