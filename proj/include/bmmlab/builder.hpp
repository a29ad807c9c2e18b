/*!
  \file builder.hpp
  \brief Emission sinks.

  Witness emitters are written once against a sink concept and run in two
  modes: CircuitBuilder materializes the gate DAG (small instances, audits,
  witness dumps), StreamingMeter folds the same gate events into cost
  counters without keeping the circuit.  Both modes see the identical event
  stream, so their reports must agree; tests pin that down.

  Sink concept:
    using handle = uint32_t;
    handle input(uint32_t b);            // borrowed: owned by the sink's cache
    handle partition(handle, ColumnInterval);   // owned: release exactly once
    handle union_gate(handle, handle);          // owned
    handle concat(handle, handle);              // owned
    void   retain(handle);               // extra alias kept by the emitter
    void   release(handle);              // drop one reference
    void   mark_output(handle, uint32_t a_row);
    void   append_value_key(handle, std::string&);

  The builder ignores retain/release; the streaming meter recycles a slot
  when its reference count reaches zero.
*/

#pragma once

#include "bits.hpp"
#include "circuit.hpp"
#include "instance.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bmmlab
{

/*! Materializes gates while evaluating values incrementally.  take()
    renumbers ids into canonical phase order (inputs, partitions, unions,
    concatenations; emission order within each phase). */
class CircuitBuilder
{
public:
  using handle = uint32_t;

  explicit CircuitBuilder( const TripartiteInstance& inst ) : inst_( &inst ) {}

  handle input( uint32_t b )
  {
    auto it = input_cache_.find( b );
    if ( it != input_cache_.end() )
      return it->second;
    Gate g;
    g.kind = GateKind::input;
    g.b = b;
    GateValue val;
    val.s = BitVector( inst_->n_b );
    val.s.set( b );
    val.k = inst_->full_interval();
    val.v = inst_->q.row( b );
    handle h = push( g, std::move( val ) );
    input_cache_.emplace( b, h );
    return h;
  }

  handle partition( handle child, ColumnInterval k )
  {
    const GateValue& in = values_[child];
    if ( !in.k.contains( k ) )
      throw std::logic_error( "CircuitBuilder: partition outside child interval" );
    Gate g;
    g.kind = GateKind::partition;
    g.left = static_cast<int32_t>( child );
    g.k = k;
    GateValue val;
    val.s = in.s;
    val.k = k;
    val.v = in.v.slice( k.lo - in.k.lo, k.width() );
    return push( g, std::move( val ) );
  }

  handle union_gate( handle left, handle right )
  {
    const GateValue& l = values_[left];
    const GateValue& r = values_[right];
    if ( !( l.k == r.k ) )
      throw std::logic_error( "CircuitBuilder: union with mismatched intervals" );
    Gate g;
    g.kind = GateKind::union_gate;
    g.left = static_cast<int32_t>( left );
    g.right = static_cast<int32_t>( right );
    GateValue val;
    val.s = l.s | r.s;
    val.k = l.k;
    val.v = l.v | r.v;
    return push( g, std::move( val ) );
  }

  handle concat( handle left, handle right )
  {
    const GateValue& l = values_[left];
    const GateValue& r = values_[right];
    if ( l.k.lo > r.k.lo || l.k.hi + 1 < r.k.lo || l.k.hi > r.k.hi || !( l.s == r.s ) )
      throw std::logic_error( "CircuitBuilder: undefined concatenation" );
    Gate g;
    g.kind = GateKind::concat;
    g.left = static_cast<int32_t>( left );
    g.right = static_cast<int32_t>( right );
    GateValue val;
    val.s = l.s;
    val.k = ColumnInterval{ l.k.lo, r.k.hi };
    val.v = BitVector( val.k.width() );
    l.v.for_each_set( [&]( std::size_t i ) { val.v.set( i ); } );
    uint32_t tail = r.k.hi - l.k.hi;
    for ( uint32_t i = 0; i < tail; ++i )
      if ( r.v.get( r.v.length() - tail + i ) )
        val.v.set( l.v.length() + i );
    return push( g, std::move( val ) );
  }

  void mark_output( handle h, uint32_t a_row )
  {
    outputs_.push_back( h );
    output_rows_.push_back( a_row );
  }

  void retain( handle ) {}
  void release( handle ) {}

  void append_value_key( handle h, std::string& key ) const
  {
    values_[h].v.append_key( key );
  }

  const GateValue& value( handle h ) const { return values_[h]; }

  std::size_t gate_count() const { return gates_.size(); }

  /*! Finished circuit with canonical ids: all partitions before all unions
      before all concatenations; stable within each phase. */
  WitnessCircuit take()
  {
    WitnessCircuit w;
    w.gates = std::move( gates_ );
    w.outputs = std::move( outputs_ );
    w.output_rows = std::move( output_rows_ );

    auto rank = []( GateKind k ) {
      switch ( k )
      {
      case GateKind::input: return 0;
      case GateKind::partition: return 1;
      case GateKind::union_gate: return 2;
      case GateKind::concat: return 3;
      }
      return 4;
    };
    std::vector<uint32_t> order( w.gates.size() );
    for ( uint32_t i = 0; i < order.size(); ++i )
      order[i] = i;
    std::stable_sort( order.begin(), order.end(), [&]( uint32_t a, uint32_t b ) {
      return rank( w.gates[a].kind ) < rank( w.gates[b].kind );
    } );
    std::vector<uint32_t> new_id( w.gates.size() );
    for ( uint32_t pos = 0; pos < order.size(); ++pos )
      new_id[order[pos]] = pos;
    std::vector<Gate> renumbered( w.gates.size() );
    for ( uint32_t old = 0; old < w.gates.size(); ++old )
    {
      Gate g = w.gates[old];
      if ( g.left >= 0 )
        g.left = static_cast<int32_t>( new_id[g.left] );
      if ( g.right >= 0 )
        g.right = static_cast<int32_t>( new_id[g.right] );
      renumbered[new_id[old]] = g;
    }
    w.gates = std::move( renumbered );
    for ( auto& out : w.outputs )
      out = new_id[out];
    w.check_shape();

    values_.clear();
    input_cache_.clear();
    return w;
  }

private:
  handle push( const Gate& g, GateValue&& val )
  {
    gates_.push_back( g );
    values_.push_back( std::move( val ) );
    return static_cast<handle>( gates_.size() - 1 );
  }

  const TripartiteInstance* inst_;
  std::vector<Gate> gates_;
  std::vector<GateValue> values_;
  std::vector<uint32_t> outputs_;
  std::vector<uint32_t> output_rows_;
  std::unordered_map<uint32_t, handle> input_cache_;
};

/*! Folds gate events into counters and the row-class ledger.  Slot values
    live only while the emitter holds a handle; released slots are recycled.
    Values of width <= 64 stay in one word. */
class StreamingMeter
{
public:
  using handle = uint32_t;

  explicit StreamingMeter( const TripartiteInstance& inst, bool collect_outputs = true )
      : inst_( &inst ), collect_outputs_( collect_outputs )
  {
    if ( collect_outputs_ )
      out_rows_.resize( inst.n_a );
  }

  handle input( uint32_t b )
  {
    auto it = input_cache_.find( b );
    if ( it != input_cache_.end() )
      return it->second;
    ++counts_[0];
    handle h = alloc();
    Slot& s = slots_[h];
    s.lo = 1;
    s.hi = inst_->n_c;
    assign_value( s, inst_->q.row( b ) );
    input_cache_.emplace( b, h );
    return h;
  }

  handle partition( handle child, ColumnInterval k )
  {
    ++counts_[1];
    // compute the slice before alloc(): slot references go stale on growth
    bool narrow;
    uint64_t v64 = 0;
    BitVector vbig;
    {
      const Slot& in = slots_[child];
      if ( k.lo < in.lo || k.hi > in.hi )
        throw std::logic_error( "StreamingMeter: partition outside child interval" );
      if ( in.wide )
      {
        vbig = in.vbig.slice( k.lo - in.lo, k.width() );
        narrow = vbig.length() <= 64;
        if ( narrow )
          v64 = vbig.word64();
      }
      else
      {
        narrow = true;
        v64 = ( in.v64 >> ( k.lo - in.lo ) ) & mask64( k.width() );
      }
    }
    handle h = alloc();
    Slot& s = slots_[h];
    s.lo = k.lo;
    s.hi = k.hi;
    if ( narrow )
    {
      s.wide = false;
      s.v64 = v64;
    }
    else
      assign_value( s, std::move( vbig ) );
    return h;
  }

  handle union_gate( handle left, handle right )
  {
    ++counts_[2];
    const Slot& l = slots_[left];
    const Slot& r = slots_[right];
    if ( l.lo != r.lo || l.hi != r.hi )
      throw std::logic_error( "StreamingMeter: union with mismatched intervals" );
    uint32_t width = l.hi - l.lo + 1;
    handle h = alloc();
    // NOTE: alloc may invalidate references; re-read slots after it.
    const Slot& ll = slots_[left];
    const Slot& rr = slots_[right];
    Slot& s = slots_[h];
    s.lo = ll.lo;
    s.hi = ll.hi;
    if ( !ll.wide && !rr.wide )
    {
      s.wide = false;
      s.v64 = ll.v64 | rr.v64;
      if ( width <= 16 )
        ledger_.insert_packed( width, ll.v64, rr.v64, s.v64 );
      else
        ledger_.insert( narrow_vec( ll, width ), narrow_vec( rr, width ),
                        narrow_vec( s, width ) );
    }
    else
    {
      BitVector v = to_bitvector( ll, width ) | to_bitvector( rr, width );
      ledger_.insert( to_bitvector( ll, width ), to_bitvector( rr, width ), v );
      assign_value( s, std::move( v ) );
    }
    return h;
  }

  handle concat( handle left, handle right )
  {
    ++counts_[3];
    const Slot& l = slots_[left];
    const Slot& r = slots_[right];
    if ( l.lo > r.lo || l.hi + 1 < r.lo || l.hi > r.hi )
      throw std::logic_error( "StreamingMeter: undefined concatenation" );
    uint32_t lo = l.lo, hi = r.hi;
    uint32_t l_width = l.hi - l.lo + 1;
    uint32_t tail = r.hi - l.hi;
    BitVector v( hi - lo + 1 );
    BitVector lv = to_bitvector( l, l_width );
    BitVector rv = to_bitvector( r, r.hi - r.lo + 1 );
    lv.for_each_set( [&]( std::size_t i ) { v.set( i ); } );
    for ( uint32_t i = 0; i < tail; ++i )
      if ( rv.get( rv.length() - tail + i ) )
        v.set( l_width + i );
    handle h = alloc();
    Slot& s = slots_[h];
    s.lo = lo;
    s.hi = hi;
    assign_value( s, std::move( v ) );
    return h;
  }

  void mark_output( handle h, uint32_t a_row )
  {
    if ( collect_outputs_ )
    {
      const Slot& s = slots_[h];
      out_rows_[a_row] = to_bitvector( s, s.hi - s.lo + 1 );
    }
  }

  void retain( handle h ) { ++slots_[h].refs; }

  void release( handle h )
  {
    Slot& s = slots_[h];
    if ( s.refs == 0 )
      throw std::logic_error( "StreamingMeter: release of a dead handle" );
    if ( --s.refs == 0 )
    {
      s.vbig = BitVector();
      free_.push_back( h );
    }
  }

  void append_value_key( handle h, std::string& key ) const
  {
    const Slot& s = slots_[h];
    if ( s.wide )
      s.vbig.append_key( key );
    else
      to_bitvector( s, s.hi - s.lo + 1 ).append_key( key );
  }

  uint64_t gate_count() const { return counts_[0] + counts_[1] + counts_[2] + counts_[3]; }
  uint64_t union_count() const { return counts_[2]; }
  const RowClassLedger& ledger() const { return ledger_; }

  /*! Collected output row values, indexed by 0-based A row; empty optional
      when the emitter produced no output for the row. */
  const std::vector<std::optional<BitVector>>& output_rows() const { return out_rows_; }

  CostReport report() const
  {
    CostReport rep;
    rep.n_a = inst_->n_a;
    rep.n_b = inst_->n_b;
    rep.n_c = inst_->n_c;
    rep.kind = inst_->source.kind;
    rep.seed = inst_->seed;
    rep.gate_count = gate_count();
    rep.union_count = union_count();
    rep.distinct_class_count = ledger_.distinct();
    rep.class_cost_sum = ledger_.cost_sum();
    return rep;
  }

private:
  struct Slot
  {
    uint32_t lo = 1, hi = 1;
    uint32_t refs = 1;
    bool wide = false;
    uint64_t v64 = 0;
    BitVector vbig;
  };

  static uint64_t mask64( uint32_t width )
  {
    return width >= 64 ? ~uint64_t( 0 ) : ( uint64_t( 1 ) << width ) - 1;
  }

  static BitVector to_bitvector( const Slot& s, uint32_t width )
  {
    if ( s.wide )
      return s.vbig;
    return narrow_vec( s, width );
  }

  static BitVector narrow_vec( const Slot& s, uint32_t width )
  {
    BitVector v( width );
    uint64_t w = s.v64;
    while ( w )
    {
      v.set( std::countr_zero( w ) );
      w &= w - 1;
    }
    return v;
  }

  void assign_value( Slot& s, BitVector v )
  {
    if ( v.length() <= 64 )
    {
      s.wide = false;
      s.v64 = v.word64();
    }
    else
    {
      s.wide = true;
      s.vbig = std::move( v );
    }
  }

  handle alloc()
  {
    if ( !free_.empty() )
    {
      handle h = free_.back();
      free_.pop_back();
      slots_[h] = Slot{};
      return h;
    }
    slots_.emplace_back();
    return static_cast<handle>( slots_.size() - 1 );
  }

  const TripartiteInstance* inst_;
  bool collect_outputs_;
  std::vector<Slot> slots_;
  std::vector<handle> free_;
  std::unordered_map<uint32_t, handle> input_cache_;
  std::array<uint64_t, 4> counts_{}; // input, partition, union, concat
  RowClassLedger ledger_;
  std::vector<std::optional<BitVector>> out_rows_;
};

} // namespace bmmlab
