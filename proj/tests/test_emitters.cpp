#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bmmlab/apfree.hpp>
#include <bmmlab/bench.hpp>
#include <bmmlab/builder.hpp>
#include <bmmlab/circuit.hpp>
#include <bmmlab/emitters.hpp>
#include <bmmlab/instance.hpp>
#include <bmmlab/rng.hpp>
#include <bmmlab/rt_graph.hpp>
#include <bmmlab/trim.hpp>

#include <set>

using namespace bmmlab;

namespace
{

TripartiteInstance example_instance( double prob = 0.0, uint64_t seed = 1 )
{
  ApFreeSet s;
  s.limit = 3;
  s.elements = { 1, 2 };
  s.method = "greedy";
  return build_instance( build_rt_graph( 3, s ), prob, seed );
}

void check_rows_match_oracle( const WitnessCircuit& w, const TripartiteInstance& inst )
{
  ValidationReport report = validate_witness( w, inst, true );
  REQUIRE( report.structured );
  REQUIRE( report.all_defined );
  REQUIRE( report.correct );
  REQUIRE( report.oracle_checked );
  REQUIRE( report.oracle_ok );
}

} // namespace

TEST_CASE( "naive witness on the example instance" )
{
  TripartiteInstance inst = example_instance();
  WitnessCircuit w = naive_witness( inst );
  // degrees 0,1,2,2,1: two union gates, three used inputs
  CostReport rep = cost_report( w, inst );
  CHECK( rep.union_count == 2 );
  CHECK( rep.gate_count == 5 );
  check_rows_match_oracle( w, inst );
}

TEST_CASE( "naive on identity P has no unions" )
{
  TripartiteInstance inst = random_instance( 4, 4, 6, 0.0, 0.5, 2 );
  for ( uint32_t i = 0; i < 4; ++i )
    inst.p.set( i, i );
  WitnessCircuit w = naive_witness( inst );
  CostReport rep = cost_report( w, inst );
  CHECK( rep.union_count == 0 );
  CHECK( rep.total() == rep.gate_count );
  check_rows_match_oracle( w, inst );

  // memo has nothing to memoize and emits the identical circuit
  WitnessCircuit m = memoized_union_witness( inst );
  CHECK( m.gates.size() == w.gates.size() );
  CHECK( cost_report( m, inst ).total() == rep.total() );
}

TEST_CASE( "naive union count is the degree sum minus active rows" )
{
  SplitMix rng( 5 );
  for ( int iter = 0; iter < 20; ++iter )
  {
    TripartiteInstance inst = random_instance( 3 + rng.below( 20 ), 3 + rng.below( 20 ),
                                               3 + rng.below( 20 ), 0.4, 0.5, 400 + iter );
    WitnessCircuit w = naive_witness( inst );
    uint64_t expect = 0;
    for ( uint32_t a = 0; a < inst.n_a; ++a )
    {
      uint64_t deg = inst.p.row( a ).popcount();
      expect += deg > 0 ? deg - 1 : 0;
    }
    CHECK( cost_report( w, inst ).union_count == expect );
    check_rows_match_oracle( w, inst );
  }
}

TEST_CASE( "memo on all-ones instances: saturated chains repeat one class" )
{
  TripartiteInstance inst = random_instance( 4, 4, 4, 1.0, 1.0, 3 );
  WitnessCircuit w = memoized_union_witness( inst );
  check_rows_match_oracle( w, inst );
  CostReport rep = cost_report( w, inst );
  CHECK( rep.distinct_class_count <= 2 * 4 );
  // the first step of every later chain reuses the stored gate
  CostReport naive_rep = cost_report( naive_witness( inst ), inst );
  CHECK( naive_rep.union_count == 12 );
  CHECK( rep.union_count < naive_rep.union_count );
  // identical value pairs dedup to the same classes either way
  CHECK( naive_rep.distinct_class_count == rep.distinct_class_count );
  CHECK( rep.distinct_class_count == 1 ); // every union is {1111,1111,1111}
}

TEST_CASE( "memo reuse never breaks correctness" )
{
  SplitMix rng( 6 );
  for ( int iter = 0; iter < 30; ++iter )
  {
    double density = iter % 3 == 0 ? 0.2 : iter % 3 == 1 ? 0.6 : 0.9;
    TripartiteInstance inst = random_instance( 3 + rng.below( 24 ), 3 + rng.below( 24 ),
                                               3 + rng.below( 24 ), density, density,
                                               800 + iter );
    WitnessCircuit w = memoized_union_witness( inst );
    check_rows_match_oracle( w, inst );
    // memo never emits more gates than naive
    CHECK( w.gates.size() <= naive_witness( inst ).gates.size() );
  }
}

TEST_CASE( "four russians validates on small instances with explicit params" )
{
  TripartiteInstance inst = random_instance( 8, 8, 8, 0.5, 0.5, 11 );
  WitnessCircuit w = four_russians_witness( inst, FourRussiansParams{ 2, 2 } );
  check_rows_match_oracle( w, inst );

  // id ordering: inputs, partitions, unions, concatenations
  int last_rank = -1;
  for ( const Gate& g : w.gates )
  {
    int rank = g.kind == GateKind::input ? 0
               : g.kind == GateKind::partition ? 1
               : g.kind == GateKind::union_gate ? 2
                                                : 3;
    CHECK( rank >= last_rank );
    last_rank = std::max( last_rank, rank );
  }

  // every input row is partitioned into ceil(n_c/w) width-w intervals
  uint64_t partitions = 0;
  for ( const Gate& g : w.gates )
    partitions += g.kind == GateKind::partition;
  CHECK( partitions == 8 * 4 );
}

TEST_CASE( "four russians handles ragged sizes and degenerate params" )
{
  SplitMix rng( 8 );
  for ( int iter = 0; iter < 12; ++iter )
  {
    TripartiteInstance inst = random_instance( 2 + rng.below( 20 ), 2 + rng.below( 20 ),
                                               2 + rng.below( 30 ), 0.4, 0.5, 900 + iter );
    uint32_t t = 1 + static_cast<uint32_t>( rng.below( std::min<uint32_t>( inst.n_b, 8 ) ) );
    uint32_t w_width = 1 + static_cast<uint32_t>( rng.below( inst.n_c ) );
    WitnessCircuit w = four_russians_witness( inst, FourRussiansParams{ t, w_width } );
    check_rows_match_oracle( w, inst );
  }
  // t=1, w=n_c degenerates to naive plus trivial partitions
  TripartiteInstance inst = example_instance();
  WitnessCircuit w = four_russians_witness( inst, FourRussiansParams{ 1, 7 } );
  check_rows_match_oracle( w, inst );
  CostReport rep = cost_report( w, inst );
  CHECK( rep.union_count == cost_report( naive_witness( inst ), inst ).union_count );
  uint64_t concats = 0;
  for ( const Gate& g : w.gates )
    concats += g.kind == GateKind::concat;
  CHECK( concats == 0 );
}

TEST_CASE( "four russians default parameters" )
{
  TripartiteInstance inst = random_instance( 64, 64, 64, 0.5, 0.5, 21 );
  WitnessCircuit w = four_russians_witness( inst );
  check_rows_match_oracle( w, inst );
}

TEST_CASE( "gray-code subset enumeration flips one element per step" )
{
  for ( uint32_t t = 2; t <= 6; ++t )
    for ( uint32_t i = 1; i < ( uint32_t( 1 ) << t ); ++i )
    {
      uint32_t prev = ( i - 1 ) ^ ( ( i - 1 ) >> 1 );
      uint32_t cur = i ^ ( i >> 1 );
      CHECK( std::popcount( prev ^ cur ) == 1 );
    }
}

TEST_CASE( "table unions always add one singleton piece" )
{
  TripartiteInstance inst = random_instance( 2, 6, 6, 0.0, 0.5, 33 );
  // no output rows: the circuit is exactly the precomputation tables
  WitnessCircuit w = block_union_witness( inst, 3 );
  EvalResult eval = eval_circuit( w, inst );
  REQUIRE( eval.all_defined() );
  for ( uint32_t id = 0; id < w.gates.size(); ++id )
  {
    const Gate& g = w.gates[id];
    if ( g.kind != GateKind::union_gate )
      continue;
    REQUIRE( eval.values[g.right].s.popcount() == 1 );
    REQUIRE( eval.values[id].s.popcount() == eval.values[g.left].s.popcount() + 1 );
  }
}

TEST_CASE( "block union respects the stated union budget" )
{
  SplitMix rng( 9 );
  for ( int iter = 0; iter < 10; ++iter )
  {
    TripartiteInstance inst = random_instance( 4 + rng.below( 30 ), 4 + rng.below( 30 ),
                                               4 + rng.below( 30 ), 0.5, 0.5, 500 + iter );
    uint32_t t = 1 + static_cast<uint32_t>( rng.below( 6 ) );
    WitnessCircuit w = block_union_witness( inst, t );
    check_rows_match_oracle( w, inst );
    CostReport rep = cost_report( w, inst );
    uint64_t groups = ( inst.n_b + t - 1 ) / t;
    uint64_t budget = groups * ( uint64_t( 1 ) << t ) + uint64_t( inst.n_a ) * groups;
    CHECK( rep.union_count <= budget );
  }
}

TEST_CASE( "block with t=1 produces the naive unions" )
{
  TripartiteInstance inst = random_instance( 10, 10, 10, 0.5, 0.5, 77 );
  CostReport block_rep = cost_report( block_union_witness( inst, 1 ), inst );
  CostReport naive_rep = cost_report( naive_witness( inst ), inst );
  CHECK( block_rep.union_count == naive_rep.union_count );
  CHECK( block_rep.distinct_class_count == naive_rep.distinct_class_count );
  CHECK( block_rep.class_cost_sum == naive_rep.class_cost_sum );
}

TEST_CASE( "streaming and materialized runs agree on every count" )
{
  SplitMix rng( 10 );
  for ( int iter = 0; iter < 15; ++iter )
  {
    TripartiteInstance inst = random_instance( 3 + rng.below( 16 ), 3 + rng.below( 16 ),
                                               3 + rng.below( 20 ), 0.5, 0.5, 600 + iter );
    for ( Algorithm alg :
          { Algorithm::naive, Algorithm::memo, Algorithm::four_russians, Algorithm::block } )
    {
      AlgorithmSpec spec;
      spec.alg = alg;
      if ( alg == Algorithm::four_russians )
      {
        spec.t = 2;
        spec.w = 3;
      }
      if ( alg == Algorithm::block )
        spec.t = 2;
      StreamingRun run = run_streaming( inst, spec, true );
      REQUIRE( run.rows_valid );
      WitnessCircuit w = build_witness( inst, spec );
      CostReport mat = cost_report( w, inst );
      REQUIRE( run.report.gate_count == mat.gate_count );
      REQUIRE( run.report.union_count == mat.union_count );
      REQUIRE( run.report.distinct_class_count == mat.distinct_class_count );
      REQUIRE( run.report.class_cost_sum == mat.class_cost_sum );
    }
  }
}

TEST_CASE( "emitters handle fully sparsified instances" )
{
  // every row exempt, no outputs, witness vacuously correct
  TripartiteInstance inst = example_instance( 1.0, 5 );
  for ( Algorithm alg :
        { Algorithm::naive, Algorithm::memo, Algorithm::four_russians, Algorithm::block } )
  {
    AlgorithmSpec spec;
    spec.alg = alg;
    StreamingRun run = run_streaming( inst, spec, true );
    CHECK( run.rows_valid );
    WitnessCircuit w = build_witness( inst, spec );
    ValidationReport report = validate_witness( w, inst );
    CHECK( report.correct );
    CHECK( report.empty_rows.size() == inst.n_a );
  }
}

TEST_CASE( "emitters validate on sparsified RS instances" )
{
  for ( uint64_t seed : { 1ull, 2ull, 3ull } )
  {
    TripartiteInstance inst = rs_instance( 20, ApFreeMethod::greedy, 0.5, seed );
    for ( Algorithm alg :
          { Algorithm::naive, Algorithm::memo, Algorithm::four_russians, Algorithm::block } )
    {
      AlgorithmSpec spec;
      spec.alg = alg;
      WitnessCircuit w = build_witness( inst, spec );
      check_rows_match_oracle( w, inst );
    }
  }
}

TEST_CASE( "witness emission is deterministic" )
{
  TripartiteInstance inst = rs_instance( 12, ApFreeMethod::greedy, 0.5, 42 );
  for ( Algorithm alg :
        { Algorithm::naive, Algorithm::memo, Algorithm::four_russians, Algorithm::block } )
  {
    AlgorithmSpec spec;
    spec.alg = alg;
    WitnessCircuit w1 = build_witness( inst, spec );
    WitnessCircuit w2 = build_witness( inst, spec );
    REQUIRE( w1.gates.size() == w2.gates.size() );
    CHECK( witness_to_json( w1 ).dump() == witness_to_json( w2 ).dump() );
  }
}

TEST_CASE( "four russians covering intervals per multi-neighbor row" )
{
  TripartiteInstance inst = random_instance( 8, 8, 9, 0.6, 0.5, 13 );
  WitnessCircuit w = four_russians_witness( inst, FourRussiansParams{ 2, 2 } );
  EvalResult eval = eval_circuit( w, inst );
  REQUIRE( eval.all_defined() );
  for ( uint32_t a = 0; a < inst.n_a; ++a )
  {
    auto intervals = covering_intervals( w, eval, inst, a );
    if ( inst.p.row( a ).popcount() < 2 )
    {
      CHECK( intervals.empty() );
      continue;
    }
    BitVector covered( inst.n_c );
    for ( const auto& k : intervals )
      for ( uint32_t c = k.lo; c <= k.hi; ++c )
        covered.set( c - 1 );
    CHECK( covered.popcount() == inst.n_c );
  }
}

TEST_CASE( "parameter validation" )
{
  TripartiteInstance inst = random_instance( 4, 4, 4, 0.5, 0.5, 1 );
  CHECK_THROWS_AS( four_russians_witness( inst, FourRussiansParams{ 9, 1 } ),
                   std::invalid_argument );
  CHECK_THROWS_AS( four_russians_witness( inst, FourRussiansParams{ 1, 9 } ),
                   std::invalid_argument );
  CHECK_THROWS_AS( block_union_witness( inst, 0 ), std::invalid_argument );
}
