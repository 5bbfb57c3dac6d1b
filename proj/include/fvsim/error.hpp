#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fvsim {

enum class Errc {
  // media
  OutOfRange,
  SizeMismatch,
  ProgramWithoutErase,
  GeometryMismatch,
  ImageCorrupt,
  DeviceLocked,
  WrongPassword,
  PasswordTooLong,
  KeyAlreadyProgrammed,
  KeyNotProgrammed,
  AddressOutOfRange,
  TapNotEnabled,
  // secure element
  AlreadyProvisioned,
  NotProvisioned,
  Destroyed,
  ChannelNotEstablished,
  ChannelAuthFailed,
  // drive firmware
  ProfileMediaMismatch,
  AlreadyUnlocked,
  DriveWiped,
  DriveLockedOrWiped,
  IntegrityTagMismatch,
  RpmbWriteRejected,
  // attack harness
  DriveNotLocked,
  ProfileNotRpmb,
  BlobNotFound,
  FormatUnknown,
  ProfileNotEmmcLock,
  // cli / scenario
  UnknownProfile,
  BadScenario,
  Io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fvsim
