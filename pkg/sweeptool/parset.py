# -*- coding: utf-8 -*-
#
# This module defines the Parset object used to read flat key = value
# configuration files.
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA  02111-1307  USA

import logging

log = logging.getLogger('SweepTool.Parset')

_trueValues = ('true', 't', 'yes', 'y', 'on', '1')
_falseValues = ('false', 'f', 'no', 'n', 'off', '0')


class Parset(object):
    """
    Flat key = value configuration.

    Keys are case insensitive. Lines starting with '#' are comments and
    everything after a '#' on a value line is ignored.

    Examples
    --------
    Read a configuration file and query it::

        >>> p = Parset('toy.cfg')
        >>> p.getInt('CH', 32)
        8

    """
    def __init__(self, fileName=None, values=None):
        self._keys = {}
        self._values = {}
        if fileName is not None:
            self.readFile(fileName)
        if values is not None:
            for key, val in values.items():
                self.replace(key, val)

    def readFile(self, fileName):
        """
        Adds the keys found in a file, replacing existing ones.

        Parameters
        ----------
        fileName : str
            Configuration file

        """
        try:
            with open(fileName) as f:
                text = f.read()
        except IOError as e:
            raise IOError('Could not open {0}: {1}'.format(fileName, e.strerror))
        log.debug('Reading configuration from {0}'.format(fileName))
        self.readString(text)

    def readString(self, text):
        """
        Adds the keys found in a string, replacing existing ones.
        """
        for lineno, line in enumerate(text.splitlines()):
            line = line.split('#')[0].strip()
            if line == '':
                continue
            if '=' not in line:
                raise IOError("Line {0} not understood (expected "
                              "'key = value'): {1}".format(lineno+1, line))
            key, val = line.split('=', 1)
            self.replace(key.strip(), val.strip())

    def replace(self, key, value):
        """
        Sets key to value.
        """
        if isinstance(value, bool):
            value = 'true' if value else 'false'
        elif isinstance(value, (list, tuple)):
            value = '[' + ', '.join(str(v) for v in value) + ']'
        self._keys[key.lower()] = key
        self._values[key.lower()] = str(value)

    def isDefined(self, key):
        return key.lower() in self._values

    def keys(self):
        return [self._keys[k] for k in sorted(self._keys)]

    def getString(self, key, default=None):
        if key.lower() in self._values:
            return self._values[key.lower()]
        if default is None:
            raise KeyError("Key '{0}' not found in configuration.".format(key))
        return default

    def getInt(self, key, default=None):
        val = self.getString(key, None if default is None else str(default))
        try:
            return int(val)
        except ValueError:
            raise ValueError("Value '{0}' for key '{1}' is not an "
                             "integer.".format(val, key))

    def getFloat(self, key, default=None):
        val = self.getString(key, None if default is None else repr(float(default)))
        try:
            return float(val)
        except ValueError:
            raise ValueError("Value '{0}' for key '{1}' is not a "
                             "number.".format(val, key))

    def getBool(self, key, default=None):
        if default is not None:
            default = 'true' if default else 'false'
        val = self.getString(key, default).lower()
        if val in _trueValues:
            return True
        if val in _falseValues:
            return False
        raise ValueError("Value '{0}' for key '{1}' is not a "
                         "boolean.".format(val, key))

    def getStringVector(self, key, default=None):
        if key.lower() not in self._values:
            if default is None:
                raise KeyError("Key '{0}' not found in configuration.".format(key))
            return list(default)
        val = self._values[key.lower()].strip()
        if val.startswith('[') and val.endswith(']'):
            val = val[1:-1]
        return [v.strip() for v in val.split(',') if v.strip() != '']

    def getIntVector(self, key, default=None):
        return [int(v) for v in self.getStringVector(key, default)]

    def toString(self, keys=None):
        """
        Returns the configuration as key = value lines.
        """
        if keys is None:
            keys = self.keys()
        return ''.join('{0} = {1}\n'.format(k, self.getString(k)) for k in keys)
