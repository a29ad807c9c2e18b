/*!
  \file bits.hpp
  \brief Packed bit vectors, boolean matrices, column intervals and the
         reference boolean matrix product.

  Bit positions inside BitVector are 0-based.  ColumnInterval carries the
  1-based inclusive column indexing used by every serialized format; the
  translation happens exactly once, at the interval boundary.
*/

#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bmmlab
{

class BitVector
{
public:
  BitVector() = default;

  explicit BitVector( std::size_t length )
      : len_( length ), words_( ( length + 63 ) / 64, 0u )
  {
  }

  /*! Parse a string of '0'/'1' characters; character 0 is bit 0 (column 1). */
  static BitVector from_bits( std::string_view bits )
  {
    BitVector v( bits.size() );
    for ( std::size_t i = 0; i < bits.size(); ++i )
    {
      if ( bits[i] == '1' )
        v.set( i );
      else if ( bits[i] != '0' )
        throw std::invalid_argument( "BitVector::from_bits: invalid character" );
    }
    return v;
  }

  std::size_t length() const { return len_; }
  bool empty() const { return len_ == 0; }

  bool get( std::size_t i ) const
  {
    return ( words_[i >> 6] >> ( i & 63 ) ) & 1u;
  }

  void set( std::size_t i, bool value = true )
  {
    if ( value )
      words_[i >> 6] |= uint64_t( 1 ) << ( i & 63 );
    else
      words_[i >> 6] &= ~( uint64_t( 1 ) << ( i & 63 ) );
  }

  std::size_t popcount() const
  {
    std::size_t c = 0;
    for ( uint64_t w : words_ )
      c += std::popcount( w );
    return c;
  }

  bool any() const
  {
    for ( uint64_t w : words_ )
      if ( w )
        return true;
    return false;
  }

  BitVector& operator|=( const BitVector& other )
  {
    require_same_length( other );
    for ( std::size_t i = 0; i < words_.size(); ++i )
      words_[i] |= other.words_[i];
    return *this;
  }

  BitVector& operator&=( const BitVector& other )
  {
    require_same_length( other );
    for ( std::size_t i = 0; i < words_.size(); ++i )
      words_[i] &= other.words_[i];
    return *this;
  }

  friend BitVector operator|( BitVector a, const BitVector& b )
  {
    a |= b;
    return a;
  }

  friend BitVector operator&( BitVector a, const BitVector& b )
  {
    a &= b;
    return a;
  }

  bool intersects( const BitVector& other ) const
  {
    require_same_length( other );
    for ( std::size_t i = 0; i < words_.size(); ++i )
      if ( words_[i] & other.words_[i] )
        return true;
    return false;
  }

  bool is_subset_of( const BitVector& other ) const
  {
    require_same_length( other );
    for ( std::size_t i = 0; i < words_.size(); ++i )
      if ( words_[i] & ~other.words_[i] )
        return false;
    return true;
  }

  /* Canonical zero-padding of the tail word makes this a plain word compare. */
  friend bool operator==( const BitVector& a, const BitVector& b )
  {
    return a.len_ == b.len_ && a.words_ == b.words_;
  }

  friend bool operator!=( const BitVector& a, const BitVector& b )
  {
    return !( a == b );
  }

  /*! Contiguous slice of `count` bits starting at 0-based position `begin`. */
  BitVector slice( std::size_t begin, std::size_t count ) const
  {
    if ( begin + count > len_ )
      throw std::invalid_argument( "BitVector::slice: out of range" );
    BitVector out( count );
    for ( std::size_t i = 0; i < out.words_.size(); ++i )
    {
      std::size_t src = begin + i * 64;
      uint64_t w = words_[src >> 6] >> ( src & 63 );
      if ( ( src & 63 ) != 0 && ( src >> 6 ) + 1 < words_.size() )
        w |= words_[( src >> 6 ) + 1] << ( 64 - ( src & 63 ) );
      out.words_[i] = w;
    }
    out.mask_tail();
    return out;
  }

  template<typename Fn>
  void for_each_set( Fn&& fn ) const
  {
    for ( std::size_t wi = 0; wi < words_.size(); ++wi )
    {
      uint64_t w = words_[wi];
      while ( w )
      {
        fn( wi * 64 + std::countr_zero( w ) );
        w &= w - 1;
      }
    }
  }

  std::vector<uint32_t> ones() const
  {
    std::vector<uint32_t> out;
    out.reserve( popcount() );
    for_each_set( [&]( std::size_t i ) { out.push_back( static_cast<uint32_t>( i ) ); } );
    return out;
  }

  /*! Lowest set bit or length() when none. */
  std::size_t first_set() const
  {
    for ( std::size_t wi = 0; wi < words_.size(); ++wi )
      if ( words_[wi] )
        return wi * 64 + std::countr_zero( words_[wi] );
    return len_;
  }

  const std::vector<uint64_t>& words() const { return words_; }

  uint64_t word64() const { return words_.empty() ? 0u : words_[0]; }

  /*! Lowercase hex dump.  Digit d covers columns 4d+1..4d+4 with column
      4d+1 as the digit's most significant bit; the final digit is padded
      with zero bits so the string has exactly ceil(length/4) digits. */
  std::string to_hex() const
  {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve( ( len_ + 3 ) / 4 );
    for ( std::size_t base = 0; base < len_; base += 4 )
    {
      unsigned d = 0;
      for ( unsigned j = 0; j < 4; ++j )
        if ( base + j < len_ && get( base + j ) )
          d |= 8u >> j;
      out.push_back( digits[d] );
    }
    return out;
  }

  static BitVector from_hex( std::string_view hex, std::size_t length )
  {
    if ( hex.size() != ( length + 3 ) / 4 )
      throw std::invalid_argument( "BitVector::from_hex: bad digit count" );
    BitVector v( length );
    for ( std::size_t di = 0; di < hex.size(); ++di )
    {
      char c = hex[di];
      unsigned d;
      if ( c >= '0' && c <= '9' )
        d = c - '0';
      else if ( c >= 'a' && c <= 'f' )
        d = 10 + ( c - 'a' );
      else
        throw std::invalid_argument( "BitVector::from_hex: invalid digit" );
      for ( unsigned j = 0; j < 4; ++j )
        if ( d & ( 8u >> j ) )
        {
          std::size_t pos = di * 4 + j;
          if ( pos >= length )
            throw std::invalid_argument( "BitVector::from_hex: set bit past length" );
          v.set( pos );
        }
    }
    return v;
  }

  std::string to_bit_string() const
  {
    std::string s( len_, '0' );
    for_each_set( [&]( std::size_t i ) { s[i] = '1'; } );
    return s;
  }

  /*! Append a canonical byte encoding (length + packed words) to `key`. */
  void append_key( std::string& key ) const
  {
    uint64_t n = len_;
    for ( int i = 0; i < 8; ++i )
      key.push_back( static_cast<char>( ( n >> ( 8 * i ) ) & 0xff ) );
    for ( uint64_t w : words_ )
      for ( int i = 0; i < 8; ++i )
        key.push_back( static_cast<char>( ( w >> ( 8 * i ) ) & 0xff ) );
  }

private:
  void require_same_length( const BitVector& other ) const
  {
    if ( len_ != other.len_ )
      throw std::invalid_argument( "BitVector: length mismatch" );
  }

  void mask_tail()
  {
    if ( len_ & 63 )
      words_.back() &= ( uint64_t( 1 ) << ( len_ & 63 ) ) - 1;
  }

  std::size_t len_ = 0;
  std::vector<uint64_t> words_;
};

/*! 1-based inclusive interval of columns of C. */
struct ColumnInterval
{
  uint32_t lo = 1;
  uint32_t hi = 1;

  uint32_t width() const { return hi - lo + 1; }

  bool valid_in( std::size_t n_cols ) const
  {
    return lo >= 1 && lo <= hi && hi <= n_cols;
  }

  bool contains( const ColumnInterval& other ) const
  {
    return lo <= other.lo && other.hi <= hi;
  }

  bool overlaps( const ColumnInterval& other ) const
  {
    return lo <= other.hi && other.lo <= hi;
  }

  friend bool operator==( const ColumnInterval&, const ColumnInterval& ) = default;
};

/*! Slice of `v` over the interval `k` (the restriction v|_K). */
inline BitVector restrict_to( const BitVector& v, ColumnInterval k )
{
  if ( !k.valid_in( v.length() ) )
    throw std::invalid_argument( "restrict_to: interval out of range" );
  return v.slice( k.lo - 1, k.width() );
}

/*! Inverse view K|_v: the 1-based columns of K where the width-|K| slice
    `slice` is one. */
inline std::vector<uint32_t> interval_ones( const BitVector& slice, ColumnInterval k )
{
  if ( slice.length() != k.width() )
    throw std::invalid_argument( "interval_ones: slice width mismatch" );
  std::vector<uint32_t> cols;
  slice.for_each_set( [&]( std::size_t i ) { cols.push_back( k.lo + static_cast<uint32_t>( i ) ); } );
  return cols;
}

class BooleanMatrix
{
public:
  BooleanMatrix() = default;

  BooleanMatrix( std::size_t n_rows, std::size_t n_cols )
      : n_rows_( n_rows ), n_cols_( n_cols ), rows_( n_rows, BitVector( n_cols ) )
  {
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }

  BitVector& row( std::size_t i ) { return rows_[i]; }
  const BitVector& row( std::size_t i ) const { return rows_[i]; }

  bool get( std::size_t i, std::size_t j ) const { return rows_[i].get( j ); }
  void set( std::size_t i, std::size_t j, bool v = true ) { rows_[i].set( j, v ); }

  std::size_t ones() const
  {
    std::size_t c = 0;
    for ( const auto& r : rows_ )
      c += r.popcount();
    return c;
  }

  friend bool operator==( const BooleanMatrix& a, const BooleanMatrix& b )
  {
    return a.n_rows_ == b.n_rows_ && a.n_cols_ == b.n_cols_ && a.rows_ == b.rows_;
  }

private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<BitVector> rows_;
};

/*! Reference boolean product: out[i][j] = OR_k p[i][k] AND q[k][j].
    Deliberately the plain triple loop; every faster path in the library is
    validated against this. */
inline BooleanMatrix bmm_oracle( const BooleanMatrix& p, const BooleanMatrix& q )
{
  if ( p.n_cols() != q.n_rows() )
    throw std::invalid_argument( "bmm_oracle: dimension mismatch" );
  BooleanMatrix out( p.n_rows(), q.n_cols() );
  for ( std::size_t i = 0; i < p.n_rows(); ++i )
    for ( std::size_t j = 0; j < q.n_cols(); ++j )
      for ( std::size_t k = 0; k < p.n_cols(); ++k )
        if ( p.get( i, k ) && q.get( k, j ) )
        {
          out.set( i, j );
          break;
        }
  return out;
}

/*! wrow(Q_S): bit-wise OR of the rows of q selected by the mask s over B. */
inline BitVector wrow( const BooleanMatrix& q, const BitVector& s )
{
  if ( s.length() != q.n_rows() )
    throw std::invalid_argument( "wrow: selector length mismatch" );
  BitVector out( q.n_cols() );
  s.for_each_set( [&]( std::size_t b ) { out |= q.row( b ); } );
  return out;
}

/*! Row-union product; the production-path counterpart of bmm_oracle. */
inline BooleanMatrix bmm_rowunion( const BooleanMatrix& p, const BooleanMatrix& q )
{
  if ( p.n_cols() != q.n_rows() )
    throw std::invalid_argument( "bmm_rowunion: dimension mismatch" );
  BooleanMatrix out( p.n_rows(), q.n_cols() );
  for ( std::size_t i = 0; i < p.n_rows(); ++i )
    out.row( i ) = wrow( q, p.row( i ) );
  return out;
}

} // namespace bmmlab
